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

#ifndef OKGIT_DATASET_H_
#define OKGIT_DATASET_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "okgit/wordpiece.hpp"

namespace okgit {

using NpId = std::uint32_t;
using RpId = std::uint32_t;
using ClusterId = std::uint32_t;

// Token that prefixes relation phrases added for head prediction. The phrase
// encoder sees it as an ordinary extra first token.
inline constexpr const char *kInverseMarker = "[INV]";

struct Triple {
  NpId head;
  RpId rp;
  NpId tail;

  friend auto operator<=>(const Triple &, const Triple &) = default;
};

// Partition of noun phrases into gold canonicalization clusters.
struct ClusterMap {
  std::vector<ClusterId> np_to_cluster;              // total map, one per NP
  std::vector<std::vector<NpId>> cluster_to_nps;     // inverse, members sorted

  std::size_t num_clusters() const { return cluster_to_nps.size(); }
  bool is_singleton(NpId np) const {
    return cluster_to_nps[np_to_cluster[np]].size() == 1;
  }
};

enum class Split { kTrain, kValid, kTest };

Split split_from_name(const std::string &name);
const char *split_name(Split s);

struct OpenKG {
  std::vector<std::string> nps;
  std::vector<std::string> rps;
  std::vector<Triple> train, valid, test;
  ClusterMap clusters;

  // Number of relation phrases before inverse augmentation; equal to
  // rps.size() when not augmented.
  RpId num_original_rps = 0;
  bool inverse_augmented = false;

  const std::vector<Triple> &triples(Split s) const;
  std::size_t num_nps() const { return nps.size(); }
  std::size_t num_rps() const { return rps.size(); }

  // Checks every id range and the cluster partition; throws ValidationError.
  void validate() const;
};

// Canonical on-disk layout: npvocab.txt, rpvocab.txt, {train,valid,test}.tsv
// (head<TAB>rp<TAB>tail, 0-based ids) and clusters.tsv (np<TAB>cluster).
OpenKG load_openkg(const std::filesystem::path &dir);
void save_openkg(const OpenKG &kg, const std::filesystem::path &dir);

// Adapter for the upstream release layout (ent2id.txt / rel2id.txt /
// {train,valid,test}_trip.txt / gold_npclust.txt).
OpenKG load_care_release(const std::filesystem::path &dir);

// Keeps only triples whose endpoints are single wordpiece tokens of the
// language model vocabulary; NPs failing the test are dropped, surviving ids
// are re-packed densely and relation phrases left without triples are removed.
OpenKG filter_single_token(const OpenKG &kg, const WordPieceTokenizer &tok);

// Doubles the relation vocabulary: each triple (h, r, t) gains a companion
// (t, r + |R|, h) in the same split. Calling twice is an error.
OpenKG augment_inverse_relations(const OpenKG &kg);

using QueryIndex = std::map<std::pair<NpId, RpId>, std::vector<NpId>>;

// Materializes (head, rp) -> sorted unique tail ids for one split.
QueryIndex query_index(const OpenKG &kg, Split split);
QueryIndex query_index(const OpenKG &kg, const std::string &split_name);

// Union of the tail sets over all three splits, for filtered ranking.
QueryIndex known_true_index(const OpenKG &kg);

}  // namespace okgit

#endif  // OKGIT_DATASET_H_
