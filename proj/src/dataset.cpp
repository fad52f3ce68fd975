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

#include "okgit/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <numeric>
#include <unordered_map>

#include "okgit/common.hpp"

namespace okgit {

namespace {

std::vector<std::string> read_lines(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw IoError("missing file: " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::uint64_t parse_u64(std::string_view field, const std::filesystem::path &path,
                        std::size_t lineno) {
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ValidationError("bad integer '" + std::string(field) + "' at " +
                          path.string() + ":" + std::to_string(lineno));
  }
  return value;
}

std::vector<Triple> read_triples(const std::filesystem::path &path,
                                 std::size_t num_nps, std::size_t num_rps) {
  std::vector<Triple> triples;
  std::size_t lineno = 0;
  for (const std::string &line : read_lines(path)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields = split(line, '\t');
    if (fields.size() != 3) {
      throw ValidationError("expected head<TAB>rp<TAB>tail at " + path.string() +
                            ":" + std::to_string(lineno));
    }
    std::uint64_t h = parse_u64(fields[0], path, lineno);
    std::uint64_t r = parse_u64(fields[1], path, lineno);
    std::uint64_t t = parse_u64(fields[2], path, lineno);
    if (h >= num_nps || t >= num_nps) {
      throw ValidationError("NP id out of range at " + path.string() + ":" +
                            std::to_string(lineno));
    }
    if (r >= num_rps) {
      throw ValidationError("RP id out of range at " + path.string() + ":" +
                            std::to_string(lineno));
    }
    triples.push_back({static_cast<NpId>(h), static_cast<RpId>(r),
                       static_cast<NpId>(t)});
  }
  return triples;
}

// Builds the inverse multimap and re-packs cluster ids densely in order of
// first appearance.
ClusterMap build_cluster_map(const std::vector<std::uint64_t> &raw_cluster_of,
                             std::size_t num_nps) {
  ClusterMap cm;
  cm.np_to_cluster.resize(num_nps);
  std::unordered_map<std::uint64_t, ClusterId> dense;
  for (std::size_t np = 0; np < num_nps; ++np) {
    auto [it, inserted] =
        dense.emplace(raw_cluster_of[np], static_cast<ClusterId>(dense.size()));
    cm.np_to_cluster[np] = it->second;
  }
  cm.cluster_to_nps.resize(dense.size());
  for (std::size_t np = 0; np < num_nps; ++np) {
    cm.cluster_to_nps[cm.np_to_cluster[np]].push_back(static_cast<NpId>(np));
  }
  return cm;
}

}  // namespace

Split split_from_name(const std::string &name) {
  if (name == "train") return Split::kTrain;
  if (name == "valid") return Split::kValid;
  if (name == "test") return Split::kTest;
  throw Error("unknown split name: " + name);
}

const char *split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kValid: return "valid";
    case Split::kTest: return "test";
  }
  throw Error("bad split enum");
}

const std::vector<Triple> &OpenKG::triples(Split s) const {
  switch (s) {
    case Split::kTrain: return train;
    case Split::kValid: return valid;
    case Split::kTest: return test;
  }
  throw Error("bad split enum");
}

void OpenKG::validate() const {
  if (clusters.np_to_cluster.size() != nps.size()) {
    throw ValidationError("cluster map does not cover every NP");
  }
  for (Split s : {Split::kTrain, Split::kValid, Split::kTest}) {
    for (const Triple &t : triples(s)) {
      if (t.head >= nps.size() || t.tail >= nps.size() || t.rp >= rps.size()) {
        throw ValidationError(std::string("triple id out of range in ") +
                              split_name(s));
      }
    }
  }
  std::size_t member_count = 0;
  for (ClusterId c = 0; c < clusters.cluster_to_nps.size(); ++c) {
    for (NpId np : clusters.cluster_to_nps[c]) {
      if (clusters.np_to_cluster[np] != c) {
        throw ValidationError("cluster map is not a partition");
      }
      ++member_count;
    }
  }
  if (member_count != nps.size()) {
    throw ValidationError("cluster map is not a partition");
  }
  // splits must be disjoint as triple sets
  std::set<Triple> seen;
  for (Split s : {Split::kTrain, Split::kValid, Split::kTest}) {
    std::set<Triple> mine(triples(s).begin(), triples(s).end());
    for (const Triple &t : mine) {
      if (!seen.insert(t).second) {
        throw ValidationError(std::string("triple shared across splits in ") +
                              split_name(s));
      }
    }
  }
}

OpenKG load_openkg(const std::filesystem::path &dir) {
  OpenKG kg;
  kg.nps = read_lines(dir / "npvocab.txt");
  kg.rps = read_lines(dir / "rpvocab.txt");
  while (!kg.nps.empty() && kg.nps.back().empty()) kg.nps.pop_back();
  while (!kg.rps.empty() && kg.rps.back().empty()) kg.rps.pop_back();
  kg.num_original_rps = static_cast<RpId>(kg.rps.size());

  kg.train = read_triples(dir / "train.tsv", kg.nps.size(), kg.rps.size());
  kg.valid = read_triples(dir / "valid.tsv", kg.nps.size(), kg.rps.size());
  kg.test = read_triples(dir / "test.tsv", kg.nps.size(), kg.rps.size());

  const std::filesystem::path cpath = dir / "clusters.tsv";
  std::vector<std::uint64_t> raw(kg.nps.size(), 0);
  std::vector<bool> assigned(kg.nps.size(), false);
  std::size_t lineno = 0;
  for (const std::string &line : read_lines(cpath)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields = split(line, '\t');
    if (fields.size() != 2) {
      throw ValidationError("expected np<TAB>cluster at " + cpath.string() +
                            ":" + std::to_string(lineno));
    }
    std::uint64_t np = parse_u64(fields[0], cpath, lineno);
    std::uint64_t cluster = parse_u64(fields[1], cpath, lineno);
    if (np >= kg.nps.size()) {
      throw ValidationError("NP id out of range at " + cpath.string() + ":" +
                            std::to_string(lineno));
    }
    if (assigned[np]) {
      std::cerr << "warning: NP " << np << " re-assigned at " << cpath.string()
                << ":" << lineno << " (last assignment wins)\n";
    }
    raw[np] = cluster;
    assigned[np] = true;
  }
  for (std::size_t np = 0; np < kg.nps.size(); ++np) {
    if (!assigned[np]) {
      throw ValidationError("NP " + std::to_string(np) +
                            " has no cluster assignment in " + cpath.string());
    }
  }
  kg.clusters = build_cluster_map(raw, kg.nps.size());
  kg.validate();
  return kg;
}

void save_openkg(const OpenKG &kg, const std::filesystem::path &dir) {
  std::filesystem::create_directories(dir);
  auto write_lines = [&](const char *name, const std::vector<std::string> &v) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw IoError(std::string("cannot write ") + name);
    for (const std::string &s : v) out << s << '\n';
  };
  write_lines("npvocab.txt", kg.nps);
  write_lines("rpvocab.txt", kg.rps);
  auto write_triples = [&](const char *name, const std::vector<Triple> &v) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw IoError(std::string("cannot write ") + name);
    for (const Triple &t : v) {
      out << t.head << '\t' << t.rp << '\t' << t.tail << '\n';
    }
  };
  write_triples("train.tsv", kg.train);
  write_triples("valid.tsv", kg.valid);
  write_triples("test.tsv", kg.test);
  std::ofstream out(dir / "clusters.tsv", std::ios::binary);
  if (!out) throw IoError("cannot write clusters.tsv");
  for (NpId np = 0; np < kg.nps.size(); ++np) {
    out << np << '\t' << kg.clusters.np_to_cluster[np] << '\n';
  }
}

OpenKG load_care_release(const std::filesystem::path &dir) {
  // id maps come as "<phrase>\t<id>"; tolerate the reversed column order.
  auto read_id_map = [&](const char *name) {
    const std::filesystem::path path = dir / name;
    std::vector<std::string> vocab;
    std::size_t lineno = 0;
    for (const std::string &line : read_lines(path)) {
      ++lineno;
      if (trim(line).empty()) continue;
      std::vector<std::string> fields = split(line, '\t');
      if (fields.size() != 2) {
        throw ValidationError("expected two columns at " + path.string() + ":" +
                              std::to_string(lineno));
      }
      std::uint64_t id;
      std::string phrase;
      auto numeric = [](const std::string &s) {
        return !s.empty() &&
               std::all_of(s.begin(), s.end(),
                           [](unsigned char c) { return std::isdigit(c); });
      };
      if (numeric(fields[1])) {
        phrase = fields[0];
        id = parse_u64(fields[1], path, lineno);
      } else if (numeric(fields[0])) {
        id = parse_u64(fields[0], path, lineno);
        phrase = fields[1];
      } else {
        throw ValidationError("no numeric id column at " + path.string() + ":" +
                              std::to_string(lineno));
      }
      if (vocab.size() <= id) vocab.resize(id + 1);
      vocab[id] = phrase;
    }
    return vocab;
  };

  OpenKG kg;
  kg.nps = read_id_map("ent2id.txt");
  kg.rps = read_id_map("rel2id.txt");
  kg.num_original_rps = static_cast<RpId>(kg.rps.size());

  auto read_trip = [&](const char *name) {
    const std::filesystem::path path = dir / name;
    std::vector<Triple> triples;
    std::size_t lineno = 0;
    for (const std::string &line : read_lines(path)) {
      ++lineno;
      if (trim(line).empty()) continue;
      std::vector<std::string> fields = split_whitespace(line);
      if (fields.size() != 3) {
        throw ValidationError("expected three ids at " + path.string() + ":" +
                              std::to_string(lineno));
      }
      std::uint64_t h = parse_u64(fields[0], path, lineno);
      std::uint64_t r = parse_u64(fields[1], path, lineno);
      std::uint64_t t = parse_u64(fields[2], path, lineno);
      if (h >= kg.nps.size() || t >= kg.nps.size() || r >= kg.rps.size()) {
        throw ValidationError("id out of range at " + path.string() + ":" +
                              std::to_string(lineno));
      }
      triples.push_back({static_cast<NpId>(h), static_cast<RpId>(r),
                         static_cast<NpId>(t)});
    }
    return triples;
  };
  kg.train = read_trip("train_trip.txt");
  kg.valid = read_trip("valid_trip.txt");
  kg.test = read_trip("test_trip.txt");

  // gold_npclust.txt: "<np> <count> <member>..."; every listed member joins
  // the cluster anchored at <np>. NPs never mentioned become singletons.
  const std::filesystem::path cpath = dir / "gold_npclust.txt";
  std::vector<std::uint64_t> raw(kg.nps.size());
  std::iota(raw.begin(), raw.end(), 0);
  std::vector<bool> assigned(kg.nps.size(), false);
  std::size_t lineno = 0;
  for (const std::string &line : read_lines(cpath)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields = split_whitespace(line);
    if (fields.size() < 3) {
      throw ValidationError("expected '<np> <count> <members...>' at " +
                            cpath.string() + ":" + std::to_string(lineno));
    }
    std::uint64_t anchor = parse_u64(fields[0], cpath, lineno);
    std::uint64_t count = parse_u64(fields[1], cpath, lineno);
    if (anchor >= kg.nps.size() || fields.size() != 2 + count) {
      throw ValidationError("malformed cluster row at " + cpath.string() + ":" +
                            std::to_string(lineno));
    }
    // anchor each member at the smallest id in the row for stability
    std::uint64_t rep = anchor;
    std::vector<std::uint64_t> members;
    for (std::size_t i = 0; i < count; ++i) {
      std::uint64_t m = parse_u64(fields[2 + i], cpath, lineno);
      if (m >= kg.nps.size()) {
        throw ValidationError("member id out of range at " + cpath.string() +
                              ":" + std::to_string(lineno));
      }
      members.push_back(m);
      rep = std::min(rep, m);
    }
    for (std::uint64_t m : members) {
      if (assigned[m] && raw[m] != rep) {
        std::cerr << "warning: NP " << m << " re-assigned at " << cpath.string()
                  << ":" << lineno << " (last assignment wins)\n";
      }
      raw[m] = rep;
      assigned[m] = true;
    }
    raw[anchor] = rep;
    assigned[anchor] = true;
  }
  kg.clusters = build_cluster_map(raw, kg.nps.size());
  kg.validate();
  return kg;
}

OpenKG filter_single_token(const OpenKG &kg, const WordPieceTokenizer &tok) {
  std::vector<bool> np_keep(kg.nps.size(), false);
  for (NpId np = 0; np < kg.nps.size(); ++np) {
    np_keep[np] = tok.is_single_token(kg.nps[np]);
  }

  auto triple_survives = [&](const Triple &t) {
    return np_keep[t.head] && np_keep[t.tail];
  };

  std::vector<bool> rp_used(kg.rps.size(), false);
  std::size_t surviving = 0;
  for (Split s : {Split::kTrain, Split::kValid, Split::kTest}) {
    for (const Triple &t : kg.triples(s)) {
      if (triple_survives(t)) {
        rp_used[t.rp] = true;
        ++surviving;
      }
    }
  }
  if (surviving == 0) {
    std::cerr << "warning: single-token filter left no triples\n";
  }

  OpenKG out;
  std::vector<NpId> np_new(kg.nps.size(), 0);
  for (NpId np = 0; np < kg.nps.size(); ++np) {
    if (np_keep[np]) {
      np_new[np] = static_cast<NpId>(out.nps.size());
      out.nps.push_back(kg.nps[np]);
    }
  }
  std::vector<RpId> rp_new(kg.rps.size(), 0);
  for (RpId rp = 0; rp < kg.rps.size(); ++rp) {
    if (rp_used[rp]) {
      rp_new[rp] = static_cast<RpId>(out.rps.size());
      out.rps.push_back(kg.rps[rp]);
    }
  }
  out.num_original_rps = static_cast<RpId>(out.rps.size());

  auto remap = [&](const std::vector<Triple> &in) {
    std::vector<Triple> res;
    for (const Triple &t : in) {
      if (triple_survives(t)) {
        res.push_back({np_new[t.head], rp_new[t.rp], np_new[t.tail]});
      }
    }
    return res;
  };
  out.train = remap(kg.train);
  out.valid = remap(kg.valid);
  out.test = remap(kg.test);

  // Clusters restricted to surviving NPs; empty clusters disappear.
  std::vector<std::uint64_t> raw(out.nps.size());
  for (NpId np = 0; np < kg.nps.size(); ++np) {
    if (np_keep[np]) raw[np_new[np]] = kg.clusters.np_to_cluster[np];
  }
  out.clusters = build_cluster_map(raw, out.nps.size());
  out.validate();
  return out;
}

OpenKG augment_inverse_relations(const OpenKG &kg) {
  if (kg.inverse_augmented) {
    throw Error("KG already carries inverse relations");
  }
  for (const std::string &rp : kg.rps) {
    if (rp.rfind(kInverseMarker, 0) == 0) {
      throw Error("inverse marker already present in RP vocabulary: " + rp);
    }
  }
  OpenKG out = kg;
  out.inverse_augmented = true;
  out.num_original_rps = static_cast<RpId>(kg.rps.size());
  for (const std::string &rp : kg.rps) {
    out.rps.push_back(std::string(kInverseMarker) + " " + rp);
  }
  auto augment = [&](std::vector<Triple> &v) {
    std::size_t n = v.size();
    v.reserve(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
      const Triple &t = v[i];
      v.push_back({t.tail, static_cast<RpId>(t.rp + out.num_original_rps),
                   t.head});
    }
  };
  augment(out.train);
  augment(out.valid);
  augment(out.test);
  out.validate();
  return out;
}

QueryIndex query_index(const OpenKG &kg, Split split) {
  QueryIndex index;
  for (const Triple &t : kg.triples(split)) {
    index[{t.head, t.rp}].push_back(t.tail);
  }
  for (auto &[key, tails] : index) {
    std::sort(tails.begin(), tails.end());
    tails.erase(std::unique(tails.begin(), tails.end()), tails.end());
  }
  return index;
}

QueryIndex query_index(const OpenKG &kg, const std::string &split_name) {
  return query_index(kg, split_from_name(split_name));
}

QueryIndex known_true_index(const OpenKG &kg) {
  QueryIndex index;
  for (Split s : {Split::kTrain, Split::kValid, Split::kTest}) {
    for (const Triple &t : kg.triples(s)) {
      index[{t.head, t.rp}].push_back(t.tail);
    }
  }
  for (auto &[key, tails] : index) {
    std::sort(tails.begin(), tails.end());
    tails.erase(std::unique(tails.begin(), tails.end()), tails.end());
  }
  return index;
}

}  // namespace okgit
