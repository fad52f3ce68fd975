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

#include "okgit/nn.hpp"

namespace okgit {

void init_xavier_uniform(Mat &m, Eigen::Index fan_in, Eigen::Index fan_out,
                         Rng &rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      m(i, j) = rng.uniform(-bound, bound);
    }
  }
}

void init_embedding(Mat &m, Eigen::Index dim, Rng &rng) {
  const double bound = 6.0 / std::sqrt(static_cast<double>(dim));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      m(i, j) = rng.uniform(-bound, bound);
    }
  }
}

// ---------------------------------------------------------------------------
// GRU
// ---------------------------------------------------------------------------

void GruCell::resize(int input, int hidden) {
  input_dim = input;
  hidden_dim = hidden;
  wz.resize(hidden, input);
  wr.resize(hidden, input);
  wn.resize(hidden, input);
  uz.resize(hidden, hidden);
  ur.resize(hidden, hidden);
  un.resize(hidden, hidden);
  bz.resize(hidden, 1);
  br.resize(hidden, 1);
  bn.resize(hidden, 1);
}

void GruCell::init(Rng &rng) {
  for (Tensor *t : {&wz, &wr, &wn}) {
    init_xavier_uniform(t->v, input_dim, hidden_dim, rng);
  }
  for (Tensor *t : {&uz, &ur, &un}) {
    init_xavier_uniform(t->v, hidden_dim, hidden_dim, rng);
  }
  // biases stay zero
}

void GruCell::collect(const std::string &prefix, std::vector<ParamRef> *out) {
  out->push_back({prefix + ".wz", &wz});
  out->push_back({prefix + ".wr", &wr});
  out->push_back({prefix + ".wn", &wn});
  out->push_back({prefix + ".uz", &uz});
  out->push_back({prefix + ".ur", &ur});
  out->push_back({prefix + ".un", &un});
  out->push_back({prefix + ".bz", &bz});
  out->push_back({prefix + ".br", &br});
  out->push_back({prefix + ".bn", &bn});
}

Vec gru_forward(const GruCell &cell, const std::vector<Vec> &inputs,
                GruTrace *trace) {
  const int hd = cell.hidden_dim;
  Vec h = Vec::Zero(hd);
  if (trace) {
    trace->x.clear();
    trace->z.clear();
    trace->r.clear();
    trace->n.clear();
    trace->un_h.clear();
    trace->h.clear();
  }
  for (const Vec &x : inputs) {
    Vec az = cell.wz.v * x + cell.uz.v * h + cell.bz.v.col(0);
    Vec ar = cell.wr.v * x + cell.ur.v * h + cell.br.v.col(0);
    Vec z = az.unaryExpr([](double a) { return sigmoid(a); });
    Vec r = ar.unaryExpr([](double a) { return sigmoid(a); });
    Vec un_h = cell.un.v * h;
    Vec an = cell.wn.v * x + r.cwiseProduct(un_h) + cell.bn.v.col(0);
    Vec n = an.array().tanh();
    Vec h_new =
        (Vec::Ones(hd) - z).cwiseProduct(n) + z.cwiseProduct(h);
    if (trace) {
      trace->x.push_back(x);
      trace->z.push_back(z);
      trace->r.push_back(r);
      trace->n.push_back(n);
      trace->un_h.push_back(un_h);
      trace->h.push_back(h_new);
    }
    h = std::move(h_new);
  }
  return h;
}

std::vector<Vec> gru_backward(GruCell &cell, const GruTrace &trace,
                              const Vec &d_final) {
  const std::size_t steps = trace.x.size();
  std::vector<Vec> dx(steps);
  Vec dh = d_final;
  for (std::size_t s = steps; s-- > 0;) {
    const Vec &x = trace.x[s];
    const Vec &z = trace.z[s];
    const Vec &r = trace.r[s];
    const Vec &n = trace.n[s];
    const Vec &un_h = trace.un_h[s];
    const Vec h_prev = s == 0 ? Vec(Vec::Zero(cell.hidden_dim)) : trace.h[s - 1];

    Vec dn = dh.cwiseProduct(Vec::Ones(cell.hidden_dim) - z);
    Vec dz = dh.cwiseProduct(h_prev - n);
    Vec dh_prev = dh.cwiseProduct(z);

    Vec dan = dn.cwiseProduct(Vec::Ones(cell.hidden_dim) - n.cwiseProduct(n));
    cell.wn.g += dan * x.transpose();
    cell.bn.g.col(0) += dan;
    Vec dr = dan.cwiseProduct(un_h);
    Vec d_un_h = dan.cwiseProduct(r);
    cell.un.g += d_un_h * h_prev.transpose();
    dh_prev += cell.un.v.transpose() * d_un_h;

    Vec daz = dz.cwiseProduct(z.cwiseProduct(Vec::Ones(cell.hidden_dim) - z));
    cell.wz.g += daz * x.transpose();
    cell.uz.g += daz * h_prev.transpose();
    cell.bz.g.col(0) += daz;
    dh_prev += cell.uz.v.transpose() * daz;

    Vec dar = dr.cwiseProduct(r.cwiseProduct(Vec::Ones(cell.hidden_dim) - r));
    cell.wr.g += dar * x.transpose();
    cell.ur.g += dar * h_prev.transpose();
    cell.br.g.col(0) += dar;
    dh_prev += cell.ur.v.transpose() * dar;

    dx[s] = cell.wz.v.transpose() * daz + cell.wr.v.transpose() * dar +
            cell.wn.v.transpose() * dan;
    dh = std::move(dh_prev);
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Batch normalization
// ---------------------------------------------------------------------------

void BatchNorm::resize(int features) {
  gamma.resize(features, 1);
  gamma.v.setOnes();
  beta.resize(features, 1);
  running_mean.setZero(features, 1);
  running_var.setOnes(features, 1);
}

void BatchNorm::collect(const std::string &prefix,
                        std::vector<ParamRef> *params,
                        std::vector<BufferRef> *buffers) {
  params->push_back({prefix + ".gamma", &gamma});
  params->push_back({prefix + ".beta", &beta});
  buffers->push_back({prefix + ".running_mean", &running_mean});
  buffers->push_back({prefix + ".running_var", &running_var});
}

Mat batchnorm_forward(BatchNorm &bn, const Mat &x, Mode mode,
                      bool update_running, BatchNormTrace *trace) {
  const Eigen::Index n = x.rows();
  const Eigen::Index f = x.cols();
  Mat y(n, f);
  if (mode == Mode::kTrain) {
    Vec mean = x.colwise().mean();
    Mat centered = x.rowwise() - mean.transpose();
    Vec var = centered.array().square().colwise().mean();
    Vec inv_std = (var.array() + bn.eps).rsqrt();
    Mat x_hat = centered.array().rowwise() * inv_std.transpose().array();
    y = (x_hat.array().rowwise() * bn.gamma.v.col(0).transpose().array())
            .rowwise() +
        bn.beta.v.col(0).transpose().array();
    if (update_running) {
      // unbiased variance feeds the running estimate
      double correction = n > 1 ? static_cast<double>(n) / (n - 1) : 1.0;
      bn.running_mean.col(0) =
          (1.0 - bn.momentum) * bn.running_mean.col(0) + bn.momentum * mean;
      bn.running_var.col(0) = (1.0 - bn.momentum) * bn.running_var.col(0) +
                              bn.momentum * (var * correction);
    }
    if (trace) {
      trace->x_hat = x_hat;
      trace->inv_std = inv_std;
      trace->centered = centered;
    }
  } else {
    Vec inv_std = (bn.running_var.col(0).array() + bn.eps).rsqrt();
    Mat x_hat = (x.rowwise() - bn.running_mean.col(0).transpose()).array().rowwise() *
                inv_std.transpose().array();
    y = (x_hat.array().rowwise() * bn.gamma.v.col(0).transpose().array())
            .rowwise() +
        bn.beta.v.col(0).transpose().array();
  }
  return y;
}

Mat batchnorm_backward(BatchNorm &bn, const BatchNormTrace &trace,
                       const Mat &dy) {
  const double n = static_cast<double>(dy.rows());
  bn.gamma.g.col(0) += (dy.array() * trace.x_hat.array()).colwise().sum().matrix();
  bn.beta.g.col(0) += dy.colwise().sum();

  Mat dx_hat = dy.array().rowwise() * bn.gamma.v.col(0).transpose().array();
  Vec sum_dx_hat = dx_hat.colwise().sum();
  Vec sum_dx_hat_xhat = (dx_hat.array() * trace.x_hat.array()).colwise().sum();
  // dx = (1/n) inv_std (n dx_hat - sum(dx_hat) - x_hat * sum(dx_hat . x_hat))
  Mat dx = (dx_hat * n).rowwise() - sum_dx_hat.transpose();
  dx.noalias() -=
      (trace.x_hat.array().rowwise() * sum_dx_hat_xhat.transpose().array())
          .matrix();
  dx = (dx / n).array().rowwise() * trace.inv_std.transpose().array();
  return dx;
}

// ---------------------------------------------------------------------------
// Dropout
// ---------------------------------------------------------------------------

Mat dropout_forward(const Mat &x, double p, Mode mode, Rng &rng,
                    DropoutTrace *trace) {
  if (mode == Mode::kEval || p <= 0.0) {
    if (trace) trace->mask.resize(0, 0);
    return x;
  }
  const double keep = 1.0 - p;
  Mat mask(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      mask(i, j) = rng.bernoulli(keep) ? 1.0 / keep : 0.0;
    }
  }
  if (trace) trace->mask = mask;
  return x.cwiseProduct(mask);
}

Mat dropout_backward(const DropoutTrace &trace, const Mat &dy) {
  if (trace.mask.size() == 0) return dy;
  return dy.cwiseProduct(trace.mask);
}

// ---------------------------------------------------------------------------
// Convolution
// ---------------------------------------------------------------------------

void Conv2d::resize(int filters_count, int k) {
  num_filters = filters_count;
  kernel = k;
  filters.resize(filters_count, k * k);
  bias.resize(filters_count, 1);
}

void Conv2d::collect(const std::string &prefix, std::vector<ParamRef> *out) {
  out->push_back({prefix + ".filters", &filters});
  out->push_back({prefix + ".bias", &bias});
}

Mat im2col(const Vec &image, int rows, int cols, int k) {
  const int out_rows = rows - k + 1;
  const int out_cols = cols - k + 1;
  if (out_rows <= 0 || out_cols <= 0) {
    throw Error("convolution kernel larger than input");
  }
  Mat patches(out_rows * out_cols, k * k);
  for (int orow = 0; orow < out_rows; ++orow) {
    for (int ocol = 0; ocol < out_cols; ++ocol) {
      const int p = orow * out_cols + ocol;
      for (int kr = 0; kr < k; ++kr) {
        for (int kc = 0; kc < k; ++kc) {
          patches(p, kr * k + kc) = image[(orow + kr) * cols + (ocol + kc)];
        }
      }
    }
  }
  return patches;
}

Vec col2im(const Mat &dpatches, int rows, int cols, int k) {
  const int out_rows = rows - k + 1;
  const int out_cols = cols - k + 1;
  Vec dimage = Vec::Zero(rows * cols);
  for (int orow = 0; orow < out_rows; ++orow) {
    for (int ocol = 0; ocol < out_cols; ++ocol) {
      const int p = orow * out_cols + ocol;
      for (int kr = 0; kr < k; ++kr) {
        for (int kc = 0; kc < k; ++kc) {
          dimage[(orow + kr) * cols + (ocol + kc)] += dpatches(p, kr * k + kc);
        }
      }
    }
  }
  return dimage;
}

}  // namespace okgit
