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

#include "okgit/tsne.hpp"

#include <cmath>
#include <set>

namespace okgit {

namespace {

// Conditional affinities for one row via binary search on the bandwidth so
// the distribution hits the target perplexity.
Vec conditional_affinities(const Vec &sq_dists, Eigen::Index self,
                           double perplexity) {
  const double target_entropy = std::log(perplexity);
  double beta = 1.0, beta_min = -1e30, beta_max = 1e30;
  Vec p(sq_dists.size());
  for (int iter = 0; iter < 64; ++iter) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < sq_dists.size(); ++j) {
      p[j] = j == self ? 0.0 : std::exp(-beta * sq_dists[j]);
      sum += p[j];
    }
    if (sum <= 0.0) sum = 1e-300;
    double entropy = 0.0;
    for (Eigen::Index j = 0; j < sq_dists.size(); ++j) {
      if (j == self) continue;
      double pj = p[j] / sum;
      if (pj > 1e-300) entropy -= pj * std::log(pj);
    }
    p /= sum;
    double diff = entropy - target_entropy;
    if (std::abs(diff) < 1e-7) break;
    if (diff > 0.0) {
      beta_min = beta;
      beta = beta_max >= 1e30 ? beta * 2.0 : (beta + beta_max) / 2.0;
    } else {
      beta_max = beta;
      beta = beta_min <= -1e30 ? beta / 2.0 : (beta + beta_min) / 2.0;
    }
  }
  return p;
}

}  // namespace

Mat tsne_2d(const Mat &points, const TsneOptions &opt) {
  const Eigen::Index n = points.rows();
  if (n == 0) throw Error("no points to embed");
  if (opt.perplexity >= static_cast<double>(n)) {
    throw Error("perplexity " + std::to_string(opt.perplexity) +
                " must be smaller than the point count " + std::to_string(n) +
                "; annotate more points or lower the perplexity");
  }

  // pairwise squared distances in the input space
  Vec sq_norms = points.rowwise().squaredNorm();
  Mat d2 = (-2.0 * (points * points.transpose())).colwise() + sq_norms;
  d2.rowwise() += sq_norms.transpose();
  d2 = d2.cwiseMax(0.0);

  Mat p(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    p.row(i) = conditional_affinities(d2.row(i), i, opt.perplexity).transpose();
  }
  Mat joint = (p + p.transpose()) / (2.0 * static_cast<double>(n));
  joint = joint.cwiseMax(1e-12);

  Rng rng(opt.seed);
  Mat y(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    y(i, 0) = rng.normal(0.0, 1e-4);
    y(i, 1) = rng.normal(0.0, 1e-4);
  }

  Mat velocity = Mat::Zero(n, 2);
  Mat gains = Mat::Ones(n, 2);

  for (int iter = 0; iter < opt.iterations; ++iter) {
    const double exaggeration =
        iter < opt.exaggeration_iters ? opt.early_exaggeration : 1.0;
    const double momentum = iter < opt.exaggeration_iters ? 0.5 : 0.8;

    Vec y_norms = y.rowwise().squaredNorm();
    Mat num = (-2.0 * (y * y.transpose())).colwise() + y_norms;
    num.rowwise() += y_norms.transpose();
    num = (1.0 + num.array()).inverse().matrix();
    for (Eigen::Index i = 0; i < n; ++i) num(i, i) = 0.0;
    double q_sum = std::max(num.sum(), 1e-12);

    Mat grad = Mat::Zero(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i == j) continue;
        double mult =
            (exaggeration * joint(i, j) - num(i, j) / q_sum) * num(i, j);
        grad.row(i) += 4.0 * mult * (y.row(i) - y.row(j));
      }
    }

    for (Eigen::Index i = 0; i < n; ++i) {
      for (int c = 0; c < 2; ++c) {
        bool same_sign = (grad(i, c) > 0.0) == (velocity(i, c) > 0.0);
        gains(i, c) = same_sign ? gains(i, c) * 0.8 : gains(i, c) + 0.2;
        gains(i, c) = std::max(gains(i, c), 0.01);
        velocity(i, c) = momentum * velocity(i, c) -
                         opt.learning_rate * gains(i, c) * grad(i, c);
        y(i, c) += velocity(i, c);
      }
    }
    y.rowwise() -= y.colwise().mean();
  }
  return y;
}

double silhouette_score(const Mat &points, const std::vector<int> &labels) {
  const Eigen::Index n = points.rows();
  if (static_cast<Eigen::Index>(labels.size()) != n || n < 2) {
    throw Error("silhouette needs one label per point and >= 2 points");
  }
  std::set<int> distinct(labels.begin(), labels.end());
  if (distinct.size() < 2) throw Error("silhouette needs >= 2 clusters");

  Mat dist(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      dist(i, j) = (points.row(i) - points.row(j)).norm();
    }
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double a = 0.0;
    int a_count = 0;
    double b = std::numeric_limits<double>::infinity();
    for (int other : distinct) {
      if (other == labels[i]) continue;
      double sum = 0.0;
      int count = 0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (labels[j] == other) {
          sum += dist(i, j);
          ++count;
        }
      }
      if (count > 0) b = std::min(b, sum / count);
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i && labels[j] == labels[i]) {
        a += dist(i, j);
        ++a_count;
      }
    }
    if (a_count == 0) {
      total += 0.0;  // singleton cluster contributes zero
      continue;
    }
    a /= a_count;
    total += (b - a) / std::max(a, b);
  }
  return total / static_cast<double>(n);
}

}  // namespace okgit
