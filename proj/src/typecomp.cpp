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

#include "okgit/typecomp.hpp"

namespace okgit {

Vec project_type(const Vec &v, const Mat &projector) {
  if (projector.cols() != v.size()) {
    throw Error("projector expects dimension " + std::to_string(projector.cols()) +
                ", got " + std::to_string(v.size()));
  }
  return projector * v;
}

double type_score(const Vec &tau, const Vec &tau_b, TypeScoreVariant variant) {
  if (tau.size() != tau_b.size()) {
    throw Error("type vectors have mismatched dimensions");
  }
  if (variant == TypeScoreVariant::kEuclid) {
    return -(tau_b - tau).squaredNorm();
  }
  return tau_b.dot(tau);
}

ScoreBundle combined_score(const Encoder &encoder, NpId head, RpId rp,
                           NpId tail, const VecF &context_vec, double gamma,
                           TypeScoreVariant variant) {
  const ModelParams &p = encoder.params();
  ScoreBundle s;
  Vec t_c = encoder.predict_tail_vector(head, rp);
  Vec tail_enc = encoder.encode_np(tail);
  s.psi_pred = t_c.dot(tail_enc);

  Vec tau = project_type(tail_enc, p.P.v);
  Vec tau_b = project_type(context_vec.cast<double>(), p.P_B.v);
  s.psi_type = type_score(tau, tau_b, variant);
  s.psi_okgit = s.psi_pred + gamma * s.psi_type;
  return s;
}

ScoreBundle combined_score(const Encoder &encoder, NpId head, RpId rp,
                           NpId tail, ContextProvider &provider, double gamma,
                           TypeScoreVariant variant) {
  ContextQuery q = make_query(encoder.kg(), head, rp);
  return combined_score(encoder, head, rp, tail, provider.context(q), gamma,
                        variant);
}

}  // namespace okgit
