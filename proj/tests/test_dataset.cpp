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

#include <doctest.h>

#include <algorithm>
#include <set>

#include "okgit/dataset.hpp"
#include "test_util.hpp"

using namespace okgit;
using namespace okgit::test;

namespace {

WordPieceTokenizer tiny_tokenizer() {
  return WordPieceTokenizer(
      {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]", "alice", "berlin", "carol",
       "delta", "eve", "##s", "smith"},
      true);
}

}  // namespace

TEST_CASE("load_openkg reads the canonical layout and validates ids") {
  TempDir tmp("dataset");
  write_dataset(tmp.path(), {"a", "b"}, {"r"}, "", "", "",
                "0\t0\n1\t1\n");
  OpenKG kg = load_openkg(tmp.path());
  CHECK(kg.num_nps() == 2);
  CHECK(kg.num_rps() == 1);
  CHECK(kg.train.empty());
  CHECK(kg.clusters.num_clusters() == 2);  // two singleton clusters
}

TEST_CASE("load_openkg rejects out-of-range ids with the line number") {
  TempDir tmp("dataset_bad");
  write_dataset(tmp.path(), {"a", "b", "c"}, {"r"}, "0\t0\t5\n", "", "",
                singleton_clusters(3));
  CHECK_THROWS_WITH_AS(load_openkg(tmp.path()),
                       doctest::Contains("train.tsv:1"), ValidationError);
}

TEST_CASE("load_openkg names the missing file") {
  TempDir tmp("dataset_missing");
  write_dataset(tmp.path(), {"a"}, {"r"}, "", "", "", singleton_clusters(1));
  std::filesystem::remove(tmp.path() / "valid.tsv");
  CHECK_THROWS_WITH_AS(load_openkg(tmp.path()), doctest::Contains("valid.tsv"),
                       IoError);
}

TEST_CASE("cluster re-assignment keeps the last entry") {
  TempDir tmp("dataset_dup");
  write_dataset(tmp.path(), {"a", "b"}, {"r"}, "", "", "",
                "0\t0\n1\t1\n0\t1\n");
  OpenKG kg = load_openkg(tmp.path());
  CHECK(kg.clusters.np_to_cluster[0] == kg.clusters.np_to_cluster[1]);
  CHECK(kg.clusters.num_clusters() == 1);
}

TEST_CASE("save/load round-trips a graph losslessly") {
  TempDir tmp("dataset_rt");
  OpenKG kg = toy_kg();
  save_openkg(kg, tmp.path());
  OpenKG back = load_openkg(tmp.path());
  CHECK(back.nps == kg.nps);
  CHECK(back.rps == kg.rps);
  CHECK(back.train == kg.train);
  CHECK(back.clusters.np_to_cluster == kg.clusters.np_to_cluster);
}

TEST_CASE("upstream release adapter") {
  TempDir tmp("care");
  write_file(tmp.path() / "ent2id.txt", "alpha\t0\nbeta\t1\ngamma\t2\n");
  write_file(tmp.path() / "rel2id.txt", "likes\t0\n");
  write_file(tmp.path() / "train_trip.txt", "0 0 1\n2 0 1\n");
  write_file(tmp.path() / "valid_trip.txt", "");
  write_file(tmp.path() / "test_trip.txt", "0 0 2\n");
  write_file(tmp.path() / "gold_npclust.txt", "0 2 0 2\n");
  OpenKG kg = load_care_release(tmp.path());
  CHECK(kg.num_nps() == 3);
  CHECK(kg.train.size() == 2);
  CHECK(kg.test.size() == 1);
  // 0 and 2 share a cluster, 1 is a singleton
  CHECK(kg.clusters.np_to_cluster[0] == kg.clusters.np_to_cluster[2]);
  CHECK(kg.clusters.num_clusters() == 2);

  SUBCASE("reversed id columns parse the same") {
    write_file(tmp.path() / "ent2id.txt", "0\talpha\n1\tbeta\n2\tgamma\n");
    OpenKG kg2 = load_care_release(tmp.path());
    CHECK(kg2.nps == kg.nps);
  }
}

TEST_CASE("filter_single_token keeps only single-piece endpoints") {
  // two-triple graph where exactly one triple has single-token endpoints
  TempDir tmp("filter");
  write_dataset(tmp.path(), {"alice", "alice smith", "berlin"},
                {"lives in", "knows"},
                "0\t0\t2\n1\t1\t2\n", "", "", singleton_clusters(3));
  OpenKG kg = load_openkg(tmp.path());
  WordPieceTokenizer tok = tiny_tokenizer();
  OpenKG f = filter_single_token(kg, tok);

  // hand-enumeration: "alice smith" is two words; triple 1 dies, and the
  // unused RP "knows" is dropped; surviving NPs re-pack densely
  CHECK(f.nps == std::vector<std::string>{"alice", "berlin"});
  CHECK(f.rps == std::vector<std::string>{"lives in"});
  REQUIRE(f.train.size() == 1);
  CHECK(f.train[0] == Triple{0, 0, 1});
  CHECK(f.clusters.num_clusters() == 2);
}

TEST_CASE("filter_single_token re-indexing is a bijection on survivors") {
  OpenKG kg = toy_kg();
  WordPieceTokenizer tok = tiny_tokenizer();
  OpenKG f = filter_single_token(kg, tok);
  // survivor strings appear exactly once and round-trip losslessly
  std::set<std::string> out_set(f.nps.begin(), f.nps.end());
  CHECK(out_set.size() == f.nps.size());
  for (const std::string &np : f.nps) {
    CHECK(std::count(kg.nps.begin(), kg.nps.end(), np) == 1);
    CHECK(tok.is_single_token(np));
  }
  // non-survivors are exactly the multi-piece NPs
  for (const std::string &np : kg.nps) {
    if (!tok.is_single_token(np)) CHECK(!out_set.count(np));
  }
}

TEST_CASE("filter_single_token on all-multiword NPs leaves empty splits") {
  TempDir tmp("filter_empty");
  write_dataset(tmp.path(), {"new york city", "san francisco"}, {"r"},
                "0\t0\t1\n", "", "", singleton_clusters(2));
  OpenKG kg = load_openkg(tmp.path());
  OpenKG f = filter_single_token(kg, tiny_tokenizer());
  CHECK(f.train.empty());
  CHECK(f.nps.empty());
}

TEST_CASE("augment_inverse_relations doubles relations and triples") {
  OpenKG kg = toy_kg();  // 3 RPs, 5 train triples
  OpenKG aug = augment_inverse_relations(kg);
  CHECK(aug.num_rps() == 6);
  CHECK(aug.train.size() == 10);
  CHECK(aug.num_original_rps == 3);
  CHECK(aug.inverse_augmented);

  SUBCASE("companion of (a, r, b) is (b, r_inv, a)") {
    for (std::size_t i = 0; i < kg.train.size(); ++i) {
      const Triple &orig = kg.train[i];
      const Triple &inv = aug.train[kg.train.size() + i];
      CHECK(inv.head == orig.tail);
      CHECK(inv.tail == orig.head);
      CHECK(inv.rp == orig.rp + 3);
    }
  }
  SUBCASE("inverse surface form carries the marker") {
    CHECK(aug.rps[3] == std::string(kInverseMarker) + " lives in");
  }
  SUBCASE("augmenting twice is rejected") {
    CHECK_THROWS_AS(augment_inverse_relations(aug), Error);
  }
}

TEST_CASE("query_index groups tails per (head, rp)") {
  OpenKG kg;
  kg.nps = {"a", "b", "c"};
  kg.rps = {"r"};
  kg.num_original_rps = 1;
  kg.train = {{0, 0, 1}, {0, 0, 2}};
  kg.clusters.np_to_cluster = {0, 1, 2};
  kg.clusters.cluster_to_nps = {{0}, {1}, {2}};
  QueryIndex idx = query_index(kg, Split::kTrain);
  REQUIRE(idx.size() == 1);
  CHECK(idx.at({0, 0}) == std::vector<NpId>{1, 2});

  SUBCASE("empty split gives an empty map") {
    CHECK(query_index(kg, Split::kValid).empty());
  }
  SUBCASE("unknown split name rejected") {
    CHECK_THROWS_AS(query_index(kg, "dev"), Error);
  }
  SUBCASE("tail multiset equals the split size") {
    std::size_t total = 0;
    for (auto &[k, v] : idx) total += v.size();
    CHECK(total == kg.train.size());  // no duplicate triples here
  }
}

TEST_CASE("augment then query_index exposes inverse membership") {
  OpenKG aug = augment_inverse_relations(toy_kg());
  QueryIndex idx = query_index(aug, Split::kTrain);
  for (const Triple &t : toy_kg().train) {
    RpId inv = t.rp + 3;
    auto it = idx.find({t.tail, inv});
    REQUIRE(it != idx.end());
    CHECK(std::count(it->second.begin(), it->second.end(), t.head) == 1);
  }
  // every key has a nonempty tail set
  for (auto &[k, v] : idx) CHECK(!v.empty());
}

TEST_CASE("known_true_index unions all splits") {
  OpenKG kg = toy_kg();
  QueryIndex all = known_true_index(kg);
  QueryIndex train = query_index(kg, Split::kTrain);
  for (auto &[k, v] : train) {
    REQUIRE(all.count(k));
    for (NpId t : v) {
      CHECK(std::count(all[k].begin(), all[k].end(), t) == 1);
    }
  }
  // the valid triple (4, 0, 1) must be visible
  CHECK(all.count({4, 0}) == 1);
}
