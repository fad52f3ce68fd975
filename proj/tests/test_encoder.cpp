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

#include "okgit/encoder.hpp"
#include "test_util.hpp"

using namespace okgit;
using namespace okgit::test;

namespace {

struct Fixture {
  OpenKG kg = toy_kg();
  WordVocab words;
  ModelParams params;

  explicit Fixture(std::uint64_t seed = 11) {
    words = WordVocab::build(kg.rps);
    params.build(toy_config(seed), static_cast<int>(kg.num_nps()),
                 static_cast<int>(words.size()));
  }
};

}  // namespace

TEST_CASE("word vocabulary reserves the unk slot and the inverse marker") {
  WordVocab v = WordVocab::build({"lives in", "works at"});
  CHECK(v.words[0] == WordVocab::kUnk);
  CHECK(v.id("lives") > 0);
  CHECK(v.id(kInverseMarker) > 0);
  CHECK(v.id("nonexistent") == 0);
}

TEST_CASE("encode_np of a singleton cluster is the raw embedding row") {
  Fixture f;
  Encoder enc(f.params, f.kg, f.words);
  // NP 1 (berlin) is a singleton
  Vec e = enc.encode_np(1);
  CHECK(e == Vec(f.params.np_emb.v.row(1).transpose()));
}

TEST_CASE("encode_np averages cluster members exactly") {
  Fixture f;
  // NPs 0 and 5 share a cluster; pin their rows at d_e = 8
  f.params.np_emb.v.row(0) << 1, 2, 1, 2, 1, 2, 1, 2;
  f.params.np_emb.v.row(5) << 3, 4, 3, 4, 3, 4, 3, 4;
  Encoder enc(f.params, f.kg, f.words);
  Vec e = enc.encode_np(0);
  Vec expected(8);
  expected << 2, 3, 2, 3, 2, 3, 2, 3;
  CHECK(e == expected);
  // both members encode to the same cluster mean
  CHECK(enc.encode_np(5) == e);
}

TEST_CASE("cluster aggregation equals the mean of member rows at fp64") {
  Fixture f;
  Encoder enc(f.params, f.kg, f.words);
  Mat all = enc.encoded_np_matrix();
  for (NpId np = 0; np < f.kg.num_nps(); ++np) {
    const auto &members =
        f.kg.clusters.cluster_to_nps[f.kg.clusters.np_to_cluster[np]];
    Vec mean = Vec::Zero(f.params.cfg.d_e);
    for (NpId m : members) mean += f.params.np_emb.v.row(m).transpose();
    mean /= static_cast<double>(members.size());
    CHECK((all.row(np).transpose() - mean).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("encode_rp is order sensitive") {
  TempDir tmp("enc_order");
  OpenKG kg = toy_kg();
  kg.rps.push_back("in lives");  // reversed word order of rp 0
  kg.num_original_rps = 4;
  WordVocab words = WordVocab::build(kg.rps);
  ModelParams params;
  params.build(toy_config(21), static_cast<int>(kg.num_nps()),
               static_cast<int>(words.size()));
  Encoder enc(params, kg, words);
  Vec fwd = enc.encode_rp(0);
  Vec rev = enc.encode_rp(3);
  CHECK((fwd - rev).norm() > 1e-8);
}

TEST_CASE("single-token rp depends only on that token and encoder params") {
  Fixture f;
  Encoder enc(f.params, f.kg, f.words);
  Vec before = enc.encode_rp(1);  // "knows", single token
  // perturbing an unrelated word row leaves it unchanged
  int unrelated = f.words.id("lives");
  f.params.word_emb.v.row(unrelated).array() += 5.0;
  Vec after = enc.encode_rp(1);
  CHECK(before == after);
}

TEST_CASE("default geometry produces 300-dimensional encodings") {
  OpenKG kg = toy_kg();
  WordVocab words = WordVocab::build(kg.rps);
  ModelConfig cfg;  // published defaults: d_e = d_r = 300
  cfg.d_b = 8;
  cfg.seed = 5;
  ModelParams params;
  params.build(cfg, static_cast<int>(kg.num_nps()),
               static_cast<int>(words.size()));
  Encoder enc(params, kg, words);
  CHECK(enc.encode_rp(0).size() == 300);
  CHECK(enc.predict_tail_vector(0, 0).size() == 300);
}

TEST_CASE("predict_tail_vector is reproducible and relation dependent") {
  Fixture f;
  Encoder enc(f.params, f.kg, f.words);
  Vec a = enc.predict_tail_vector(0, 0);
  Vec b = enc.predict_tail_vector(0, 0);
  CHECK(a == b);  // bitwise purity of eval mode
  Vec c = enc.predict_tail_vector(0, 1);
  CHECK((a - c).norm() > 1e-10);
}

TEST_CASE("score_pred matches a scalar-loop dot product oracle") {
  Fixture f;
  Encoder enc(f.params, f.kg, f.words);
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    Vec t_c(f.params.cfg.d_e);
    for (int i = 0; i < t_c.size(); ++i) t_c[i] = rng.normal();
    NpId tail = static_cast<NpId>(rng.below(f.kg.num_nps()));
    Vec enc_t = enc.encode_np(tail);
    double oracle = 0.0;
    for (int i = 0; i < t_c.size(); ++i) oracle += t_c[i] * enc_t[i];
    CHECK(enc.score_pred(t_c, tail) == doctest::Approx(oracle).epsilon(1e-6));
  }
}

TEST_CASE("score_pred unit cases") {
  Fixture f;
  f.params.np_emb.v.row(1).setZero();
  f.params.np_emb.v(1, 0) = 1.0;  // unit vector along axis 0
  Encoder enc(f.params, f.kg, f.words);
  Vec t_c = Vec::Zero(8);
  t_c[0] = 1.0;
  CHECK(enc.score_pred(t_c, 1) == 1.0);
  Vec ortho = Vec::Zero(8);
  ortho[3] = 2.5;
  CHECK(enc.score_pred(ortho, 1) == 0.0);
}

TEST_CASE("parameter save/load round-trips through float32 exactly") {
  TempDir tmp("ckpt");
  Fixture f;
  f.params.save(tmp.path() / "params.bin");

  Fixture g(11);  // same shapes, same seed; values then overwritten
  g.params.load(tmp.path() / "params.bin");

  // loaded values equal the float32-cast originals
  auto refs_a = f.params.trainable();
  auto refs_b = g.params.trainable();
  REQUIRE(refs_a.size() == refs_b.size());
  for (std::size_t i = 0; i < refs_a.size(); ++i) {
    Mat cast = refs_a[i].tensor->v.cast<float>().cast<double>();
    CHECK(refs_b[i].tensor->v == cast);
  }

  // saving the loaded params reproduces the file byte for byte
  g.params.save(tmp.path() / "params2.bin");
  std::ifstream f1(tmp.path() / "params.bin", std::ios::binary);
  std::ifstream f2(tmp.path() / "params2.bin", std::ios::binary);
  std::string s1((std::istreambuf_iterator<char>(f1)), {});
  std::string s2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(s1 == s2);
}

TEST_CASE("embedding tables can be seeded from external vectors") {
  OpenKG kg = toy_kg();
  WordVocab words = WordVocab::build(kg.rps);
  Rng rng(91);

  SUBCASE("direct initialization keeps the vectors trainable") {
    Mat init(kg.num_nps(), 8);
    for (Eigen::Index i = 0; i < init.rows(); ++i) {
      for (int j = 0; j < 8; ++j) init(i, j) = rng.normal();
    }
    ModelConfig cfg = toy_config(92);
    cfg.np_init = NpInit::kLm;
    ModelParams params;
    params.build(cfg, static_cast<int>(kg.num_nps()),
                 static_cast<int>(words.size()), &init);
    CHECK(params.np_emb.v == init);
    bool trainable = false;
    for (ParamRef &r : params.trainable()) {
      if (r.name == "np_emb") trainable = true;
    }
    CHECK(trainable);
  }

  SUBCASE("projected initialization freezes the source vectors") {
    const int src_dim = 12;
    Mat init(kg.num_nps(), src_dim);
    for (Eigen::Index i = 0; i < init.rows(); ++i) {
      for (int j = 0; j < src_dim; ++j) init(i, j) = rng.normal();
    }
    ModelConfig cfg = toy_config(93);
    cfg.np_init = NpInit::kLmProj;
    ModelParams params;
    params.build(cfg, static_cast<int>(kg.num_nps()),
                 static_cast<int>(words.size()), &init);
    CHECK(params.np_proj.v.rows() == 8);
    CHECK(params.np_proj.v.cols() == src_dim);
    for (ParamRef &r : params.trainable()) CHECK(r.name != "np_emb");

    // encoded NP = projection of the frozen source row
    Encoder enc(params, kg, words);
    Vec expect = params.np_proj.v * init.row(1).transpose();
    CHECK((enc.encode_np(1) - expect).cwiseAbs().maxCoeff() < 1e-12);

    // checkpoint round-trip restores both the projection and the source
    TempDir tmp("lmproj");
    params.save(tmp.path() / "params.bin");
    ModelParams reload;
    reload.build(cfg, static_cast<int>(kg.num_nps()),
                 static_cast<int>(words.size()), &init);
    reload.np_emb.v.setZero();
    reload.load(tmp.path() / "params.bin");
    CHECK(reload.np_emb.v == Mat(init.cast<float>().cast<double>()));
  }

  SUBCASE("shape mismatches are rejected") {
    Mat wrong(2, 8);
    ModelConfig cfg = toy_config(94);
    cfg.np_init = NpInit::kLm;
    ModelParams params;
    CHECK_THROWS_AS(params.build(cfg, static_cast<int>(kg.num_nps()),
                                 static_cast<int>(words.size()), &wrong),
                    Error);
  }
}

TEST_CASE("unknown rp words map to the shared unk row") {
  Fixture f;
  Encoder enc(f.params, f.kg, f.words);
  std::vector<int> ids = enc.rp_word_ids(0);
  for (int id : ids) CHECK(id > 0);  // all known here
  OpenKG kg2 = f.kg;
  kg2.rps.push_back("entirely unseen words");
  kg2.num_original_rps = 4;
  Encoder enc2(f.params, kg2, f.words);
  std::vector<int> unk_ids = enc2.rp_word_ids(3);
  for (int id : unk_ids) CHECK(id == 0);
}
