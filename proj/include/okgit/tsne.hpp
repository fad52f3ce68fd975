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

#ifndef OKGIT_TSNE_H_
#define OKGIT_TSNE_H_

#include <cstdint>
#include <vector>

#include "okgit/nn.hpp"

namespace okgit {

struct TsneOptions {
  double perplexity = 15.0;
  int iterations = 2000;
  double learning_rate = 200.0;
  double early_exaggeration = 12.0;
  int exaggeration_iters = 250;
  std::uint64_t seed = 0;
};

// Exact (dense) t-SNE to two dimensions. Deterministic for a fixed seed.
// Throws when the perplexity is not smaller than the point count.
Mat tsne_2d(const Mat &points, const TsneOptions &options);

// Mean silhouette coefficient over Euclidean distances; labels are category
// ids per row. Requires at least two distinct labels.
double silhouette_score(const Mat &points, const std::vector<int> &labels);

}  // namespace okgit

#endif  // OKGIT_TSNE_H_
