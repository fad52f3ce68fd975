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

#ifndef OKGIT_TYPECOMP_H_
#define OKGIT_TYPECOMP_H_

#include "okgit/encoder.hpp"
#include "okgit/lm_context.hpp"

namespace okgit {

// Matrix-vector projection into the shared type space.
Vec project_type(const Vec &v, const Mat &projector);

// euclid: negative squared Euclidean distance (<= 0, zero iff equal);
// dot: plain inner product.
double type_score(const Vec &tau, const Vec &tau_b, TypeScoreVariant variant);

struct ScoreBundle {
  double psi_pred = 0.0;
  double psi_type = 0.0;
  double psi_okgit = 0.0;
};

// Full per-triple score: prediction score from the encoder plus gamma times
// the type-compatibility score between the projected candidate embedding and
// the projected context vector.
ScoreBundle combined_score(const Encoder &encoder, NpId head, RpId rp,
                           NpId tail, ContextProvider &provider, double gamma,
                           TypeScoreVariant variant);

// Same, with the context vector supplied by the caller (e.g. from a cache).
ScoreBundle combined_score(const Encoder &encoder, NpId head, RpId rp,
                           NpId tail, const VecF &context_vec, double gamma,
                           TypeScoreVariant variant);

}  // namespace okgit

#endif  // OKGIT_TYPECOMP_H_
