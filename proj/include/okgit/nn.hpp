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

#ifndef OKGIT_NN_H_
#define OKGIT_NN_H_

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "okgit/common.hpp"

namespace okgit {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

enum class Mode { kTrain, kEval };

// Trainable tensor: value plus accumulated gradient of identical shape.
struct Tensor {
  Mat v;
  Mat g;

  void resize(Eigen::Index rows, Eigen::Index cols) {
    v.setZero(rows, cols);
    g.setZero(rows, cols);
  }
  void zero_grad() { g.setZero(); }
};

struct ParamRef {
  std::string name;
  Tensor *tensor;
};

// Non-trainable persistent state (batch-norm running statistics).
struct BufferRef {
  std::string name;
  Mat *value;
};

// Xavier/Glorot uniform in +/- sqrt(6 / (fan_in + fan_out)).
void init_xavier_uniform(Mat &m, Eigen::Index fan_in, Eigen::Index fan_out,
                         Rng &rng);
// Classic embedding-table init, uniform in +/- 6/sqrt(dim).
void init_embedding(Mat &m, Eigen::Index dim, Rng &rng);

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// ---------------------------------------------------------------------------
// GRU (single direction)
// ---------------------------------------------------------------------------

//   z = sigmoid(Wz x + Uz h + bz)
//   r = sigmoid(Wr x + Ur h + br)
//   n = tanh(Wn x + r . (Un h) + bn)
//   h' = (1 - z) . n + z . h
struct GruCell {
  Tensor wz, wr, wn;  // hidden x input
  Tensor uz, ur, un;  // hidden x hidden
  Tensor bz, br, bn;  // hidden x 1

  int input_dim = 0;
  int hidden_dim = 0;

  void resize(int input, int hidden);
  void init(Rng &rng);
  void collect(const std::string &prefix, std::vector<ParamRef> *out);
};

// Per-sequence activations saved by the forward pass.
struct GruTrace {
  std::vector<Vec> x;       // inputs
  std::vector<Vec> z, r, n; // gate activations
  std::vector<Vec> un_h;    // Un * h_prev
  std::vector<Vec> h;       // states, h[t] is the state after step t
};

// Runs the cell over `inputs`; returns the final state. `trace` may be null
// in eval paths that will not call backward.
Vec gru_forward(const GruCell &cell, const std::vector<Vec> &inputs,
                GruTrace *trace);

// Backpropagates d(final state); accumulates parameter gradients and returns
// gradients w.r.t. each input.
std::vector<Vec> gru_backward(GruCell &cell, const GruTrace &trace,
                              const Vec &d_final);

// ---------------------------------------------------------------------------
// Batch normalization
// ---------------------------------------------------------------------------

// Normalizes each column of a (batch x features) matrix. The 2-d convolution
// path reuses it by flattening (sample, position) into rows per channel.
struct BatchNorm {
  Tensor gamma, beta;     // features x 1
  Mat running_mean;       // features x 1
  Mat running_var;        // features x 1
  double eps = 1e-5;
  double momentum = 0.1;

  void resize(int features);
  void collect(const std::string &prefix, std::vector<ParamRef> *params,
               std::vector<BufferRef> *buffers);
};

struct BatchNormTrace {
  Mat x_hat;       // normalized input
  Vec inv_std;     // per-feature 1/sqrt(var + eps)
  Mat centered;    // x - mean
};

Mat batchnorm_forward(BatchNorm &bn, const Mat &x, Mode mode,
                      bool update_running, BatchNormTrace *trace);
Mat batchnorm_backward(BatchNorm &bn, const BatchNormTrace &trace,
                       const Mat &dy);

// ---------------------------------------------------------------------------
// Dropout
// ---------------------------------------------------------------------------

// Inverted dropout; identity in eval mode or when p == 0.
struct DropoutTrace {
  Mat mask;  // already scaled by 1/(1-p); empty means identity
};

Mat dropout_forward(const Mat &x, double p, Mode mode, Rng &rng,
                    DropoutTrace *trace);
Mat dropout_backward(const DropoutTrace &trace, const Mat &dy);

// ---------------------------------------------------------------------------
// 2-d convolution (single input channel, square kernel, no padding)
// ---------------------------------------------------------------------------

struct Conv2d {
  Tensor filters;  // num_filters x (k*k)
  Tensor bias;     // num_filters x 1
  int kernel = 3;
  int num_filters = 0;

  void resize(int filters_count, int k);
  void collect(const std::string &prefix, std::vector<ParamRef> *out);
};

// im2col patch extraction for an (rows x cols) image flattened row-major.
// Output is (out_positions x k*k); position index is out_row * out_cols + out_col.
Mat im2col(const Vec &image, int rows, int cols, int k);
// Adjoint: scatters patch gradients back to image gradient.
Vec col2im(const Mat &dpatches, int rows, int cols, int k);

}  // namespace okgit

#endif  // OKGIT_NN_H_
