// Copyright 2026 The OKGIT Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef OKGIT_TESTS_SYNTHETIC_H_
#define OKGIT_TESTS_SYNTHETIC_H_

#include <set>
#include <string>
#include <vector>

#include "okgit/dataset.hpp"
#include "okgit/lm_context.hpp"

namespace okgit::test {

// Latent-type world for end-to-end pipeline tests: every NP carries one of
// `num_types` hidden categories, every relation selects a head and a tail
// category, and triples are consistent with those selections. A companion
// context provider emits noisy category centroids, mimicking a frozen
// language model that knows answer categories but not answers.
struct SyntheticWorld {
  struct Options {
    int num_types = 3;
    int nps_per_type = 10;
    int rps_per_type = 2;       // relations per (head type, tail type) pair
    int triples_per_rp = 12;
    int context_dim = 16;
    double context_noise = 0.05;
    std::uint64_t seed = 99;
  };

  Options opt;
  OpenKG kg;                 // not yet inverse-augmented
  std::vector<int> np_type;  // category per NP
  std::vector<int> rp_head_type, rp_tail_type;
  Mat centroids;             // num_types x context_dim

  static SyntheticWorld build(const Options &opt_in) {
    SyntheticWorld w;
    w.opt = opt_in;
    Rng rng(opt_in.seed);

    const int n = opt_in.num_types * opt_in.nps_per_type;
    for (int t = 0; t < opt_in.num_types; ++t) {
      for (int i = 0; i < opt_in.nps_per_type; ++i) {
        w.kg.nps.push_back("np" + std::to_string(t) + "x" + std::to_string(i));
        w.np_type.push_back(t);
      }
    }
    // every fifth NP shares a cluster with its predecessor of the same type
    w.kg.clusters.np_to_cluster.resize(n);
    ClusterId next = 0;
    for (int i = 0; i < n; ++i) {
      if (i % opt_in.nps_per_type != 0 && i % 5 == 0) {
        w.kg.clusters.np_to_cluster[i] = w.kg.clusters.np_to_cluster[i - 1];
      } else {
        w.kg.clusters.np_to_cluster[i] = next++;
      }
    }
    w.kg.clusters.cluster_to_nps.resize(next);
    for (int i = 0; i < n; ++i) {
      w.kg.clusters.cluster_to_nps[w.kg.clusters.np_to_cluster[i]].push_back(i);
    }

    // relations: head type h, tail type (h + shift) % T, a few per pair
    const char *verbs[] = {"links", "feeds", "sends", "maps"};
    for (int h = 0; h < opt_in.num_types; ++h) {
      for (int j = 0; j < opt_in.rps_per_type; ++j) {
        int tail = (h + 1 + j) % opt_in.num_types;
        w.kg.rps.push_back(std::string(verbs[j % 4]) + " type" +
                           std::to_string(h) + " to type" + std::to_string(tail));
        w.rp_head_type.push_back(h);
        w.rp_tail_type.push_back(tail);
      }
    }
    w.kg.num_original_rps = static_cast<RpId>(w.kg.rps.size());

    // consistent triples, split 80/10/10
    std::vector<Triple> all;
    std::set<Triple> used;
    for (RpId r = 0; r < w.kg.num_rps(); ++r) {
      for (int k = 0; k < opt_in.triples_per_rp; ++k) {
        for (int attempt = 0; attempt < 50; ++attempt) {
          NpId h = static_cast<NpId>(w.rp_head_type[r] * opt_in.nps_per_type +
                                     rng.below(opt_in.nps_per_type));
          NpId t = static_cast<NpId>(w.rp_tail_type[r] * opt_in.nps_per_type +
                                     rng.below(opt_in.nps_per_type));
          Triple triple{h, r, t};
          if (used.insert(triple).second) {
            all.push_back(triple);
            break;
          }
        }
      }
    }
    rng.shuffle(all);
    const std::size_t n_test = all.size() / 10;
    const std::size_t n_valid = all.size() / 10;
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (i < n_test) {
        w.kg.test.push_back(all[i]);
      } else if (i < n_test + n_valid) {
        w.kg.valid.push_back(all[i]);
      } else {
        w.kg.train.push_back(all[i]);
      }
    }
    w.kg.validate();

    w.centroids.setZero(opt_in.num_types, opt_in.context_dim);
    for (int t = 0; t < opt_in.num_types; ++t) {
      for (int c = 0; c < opt_in.context_dim; ++c) {
        w.centroids(t, c) = rng.normal(0.0, 1.0);
      }
    }
    return w;
  }
};

// Emits the centroid of the answer's category plus deterministic noise keyed
// by the query. Pure function of the query, so cache-compatible.
class SyntheticContextProvider : public ContextProvider {
 public:
  SyntheticContextProvider(const SyntheticWorld &world, const OpenKG &augmented)
      : world_(world), kg_(augmented), id_("synthetic") {}

  const std::string &id() const override { return id_; }
  int dim() const override { return world_.opt.context_dim; }

  VecF context(const ContextQuery &q) override {
    int answer_type;
    if (q.dir == Direction::kTail) {
      answer_type = world_.rp_tail_type[q.rp];
    } else {
      answer_type = world_.rp_head_type[q.rp - kg_.num_original_rps];
    }
    std::uint64_t key = (static_cast<std::uint64_t>(q.head) << 24) ^
                        (static_cast<std::uint64_t>(q.rp) << 2) ^
                        static_cast<std::uint64_t>(q.dir);
    Rng rng(world_.opt.seed ^ key);
    VecF v(world_.opt.context_dim);
    for (int c = 0; c < world_.opt.context_dim; ++c) {
      v[c] = static_cast<float>(world_.centroids(answer_type, c) +
                                world_.opt.context_noise * rng.normal());
    }
    return v;
  }

 private:
  const SyntheticWorld &world_;
  const OpenKG &kg_;
  std::string id_;
};

}  // namespace okgit::test

#endif  // OKGIT_TESTS_SYNTHETIC_H_
