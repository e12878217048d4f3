// fuseid/netcore.hpp

// Copyright 2026  The Fuseid Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Minimal deterministic dense-network kernel: dense layers, L2
// normalization, inverted dropout, element-wise fusion, softmax, categorical
// cross-entropy, their analytic backward passes, and Adam.
//
// Parameters are stored as float (the on-disk precision, so models
// round-trip bit-exactly); all arithmetic runs in double. Every operation is
// a pure function of its inputs plus explicit RNG state, so single-threaded
// results are bit-reproducible.

#ifndef FUSEID_NETCORE_HPP_
#define FUSEID_NETCORE_HPP_

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fuseid/common.hpp"
#include "fuseid/rng.hpp"

namespace fuseid {

using Vec = std::vector<double>;

// Row-major float matrix; the parameter storage type.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> data;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0f) {}

  float& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  float at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::size_t size() const { return data.size(); }
};

enum class Activation { kRelu, kIdentity };

inline const char* activation_name(Activation a) {
  return a == Activation::kRelu ? "relu" : "identity";
}

inline Activation activation_from_name(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "identity") return Activation::kIdentity;
  throw Error(ErrorCode::kValidation, Msg() << "unknown activation: " << name);
}

struct DenseLayer {
  Mat weights;              // out_dim x in_dim
  std::vector<float> bias;  // out_dim
  Activation activation = Activation::kRelu;

  std::size_t in_dim() const { return weights.cols; }
  std::size_t out_dim() const { return weights.rows; }
};

// Uniform init in [-s, s] with s = sqrt(6 / (in + out)); zero biases.
inline DenseLayer make_dense(std::size_t in_dim, std::size_t out_dim,
                             Activation activation, Rng& rng) {
  if (in_dim == 0 || out_dim == 0)
    throw Error(ErrorCode::kDimension, "dense layer dimensions must be positive");
  DenseLayer layer;
  layer.weights = Mat(out_dim, in_dim);
  layer.bias.assign(out_dim, 0.0f);
  layer.activation = activation;
  double scale = std::sqrt(6.0 / static_cast<double>(in_dim + out_dim));
  for (float& w : layer.weights.data)
    w = static_cast<float>(rng.uniform(-scale, scale));
  return layer;
}

inline double apply_activation(Activation a, double z) {
  return (a == Activation::kRelu && z < 0.0) ? 0.0 : z;
}

// --- Forward operations -----------------------------------------------------

// Cache for the backward pass: the layer input and pre-activation values.
struct DenseCache {
  Vec input;
  Vec pre_activation;
};

inline Vec dense_forward(const DenseLayer& layer, std::span<const double> x,
                         DenseCache* cache = nullptr) {
  if (x.size() != layer.in_dim())
    throw Error(ErrorCode::kDimension,
                Msg() << "dense_forward: input size " << x.size()
                      << " != in_dim " << layer.in_dim());
  Vec out(layer.out_dim());
  for (std::size_t r = 0; r < layer.out_dim(); ++r) {
    const float* row = layer.weights.data.data() + r * layer.in_dim();
    double acc = static_cast<double>(layer.bias[r]);
    for (std::size_t c = 0; c < layer.in_dim(); ++c)
      acc += static_cast<double>(row[c]) * x[c];
    out[r] = acc;
  }
  if (cache != nullptr) {
    cache->input.assign(x.begin(), x.end());
    cache->pre_activation = out;
  }
  for (double& v : out) v = apply_activation(layer.activation, v);
  return out;
}

inline double l2_norm(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc);
}

constexpr double kNormEpsilon = 1e-12;

// x / max(||x||, 1e-12). The all-zero vector maps to itself.
inline Vec l2_normalize(std::span<const double> x) {
  double denom = std::max(l2_norm(x), kNormEpsilon);
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] / denom;
  return out;
}

// Inverted dropout: during training, zero each component with probability
// `rate` and scale survivors by 1/(1-rate); at inference the identity.
// The returned mask already folds in the survivor scaling, so
// backward is a plain component-wise product with it.
inline std::pair<Vec, Vec> dropout_forward(std::span<const double> x,
                                           double rate, Rng& rng,
                                           bool training) {
  if (rate < 0.0 || rate >= 1.0)
    throw Error(ErrorCode::kConfig, Msg() << "dropout rate must be in [0,1): " << rate);
  Vec out(x.size());
  Vec mask(x.size(), 1.0);
  if (!training || rate == 0.0) {
    std::copy(x.begin(), x.end(), out.begin());
    return {std::move(out), std::move(mask)};
  }
  double keep_scale = 1.0 / (1.0 - rate);
  for (std::size_t i = 0; i < x.size(); ++i) {
    mask[i] = rng.uniform() < rate ? 0.0 : keep_scale;
    out[i] = x[i] * mask[i];
  }
  return {std::move(out), std::move(mask)};
}

inline Vec fuse_multiply(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw Error(ErrorCode::kDimension,
                Msg() << "fuse_multiply: sizes " << a.size() << " and " << b.size());
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

// Max-subtraction stabilized softmax; output sums to 1.
inline Vec softmax(std::span<const double> logits) {
  if (logits.empty())
    throw Error(ErrorCode::kDimension, "softmax: empty logits");
  double max_logit = logits[0];
  for (double v : logits) max_logit = std::max(max_logit, v);
  Vec out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - max_logit);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

constexpr double kLogClamp = 1e-12;

inline Vec one_hot(std::size_t num_classes, std::size_t index) {
  if (index >= num_classes)
    throw Error(ErrorCode::kDimension,
                Msg() << "one_hot: index " << index << " >= " << num_classes);
  Vec y(num_classes, 0.0);
  y[index] = 1.0;
  return y;
}

// -sum_i y_i log(max(p_i, 1e-12)); for one-hot labels this is -log p_true.
inline double cross_entropy(std::span<const double> pred,
                            std::span<const double> label) {
  if (pred.size() != label.size())
    throw Error(ErrorCode::kDimension,
                Msg() << "cross_entropy: sizes " << pred.size() << " and "
                      << label.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (label[i] != 0.0)
      loss -= label[i] * std::log(std::max(pred[i], kLogClamp));
  return loss;
}

inline double cross_entropy(std::span<const double> pred, std::size_t true_class) {
  if (true_class >= pred.size())
    throw Error(ErrorCode::kDimension,
                Msg() << "cross_entropy: class " << true_class << " >= "
                      << pred.size());
  return -std::log(std::max(pred[true_class], kLogClamp));
}

// --- Backward operations ----------------------------------------------------

struct DenseGrads {
  std::vector<double> d_weights;  // same layout as Mat.data
  std::vector<double> d_bias;
  Vec d_input;
};

inline DenseGrads dense_backward(const DenseLayer& layer, const DenseCache& cache,
                                 std::span<const double> upstream) {
  if (upstream.size() != layer.out_dim())
    throw Error(ErrorCode::kDimension,
                Msg() << "dense_backward: upstream size " << upstream.size()
                      << " != out_dim " << layer.out_dim());
  std::size_t in = layer.in_dim(), out = layer.out_dim();
  DenseGrads g;
  g.d_weights.assign(in * out, 0.0);
  g.d_bias.assign(out, 0.0);
  g.d_input.assign(in, 0.0);
  for (std::size_t r = 0; r < out; ++r) {
    double dz = upstream[r];
    if (layer.activation == Activation::kRelu && cache.pre_activation[r] < 0.0)
      dz = 0.0;
    g.d_bias[r] = dz;
    const float* row = layer.weights.data.data() + r * in;
    double* drow = g.d_weights.data() + r * in;
    for (std::size_t c = 0; c < in; ++c) {
      drow[c] = dz * cache.input[c];
      g.d_input[c] += static_cast<double>(row[c]) * dz;
    }
  }
  return g;
}

// Full Jacobian of x / max(||x||, eps). Above the guard this is
// (I - y y^T) / ||x|| with y = x/||x||; inside the guard region the
// denominator is constant, so the map is linear with slope 1/eps.
inline Vec l2_normalize_backward(std::span<const double> x,
                                 std::span<const double> upstream) {
  if (x.size() != upstream.size())
    throw Error(ErrorCode::kDimension, "l2_normalize_backward: size mismatch");
  double n = l2_norm(x);
  Vec dx(x.size());
  if (n < kNormEpsilon) {
    for (std::size_t i = 0; i < x.size(); ++i) dx[i] = upstream[i] / kNormEpsilon;
    return dx;
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) dot += (x[i] / n) * upstream[i];
  for (std::size_t i = 0; i < x.size(); ++i)
    dx[i] = (upstream[i] - (x[i] / n) * dot) / n;
  return dx;
}

inline Vec dropout_backward(std::span<const double> mask,
                            std::span<const double> upstream) {
  if (mask.size() != upstream.size())
    throw Error(ErrorCode::kDimension, "dropout_backward: size mismatch");
  Vec dx(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) dx[i] = upstream[i] * mask[i];
  return dx;
}

inline std::pair<Vec, Vec> fuse_multiply_backward(std::span<const double> a,
                                                  std::span<const double> b,
                                                  std::span<const double> upstream) {
  if (a.size() != b.size() || a.size() != upstream.size())
    throw Error(ErrorCode::kDimension, "fuse_multiply_backward: size mismatch");
  Vec da(a.size()), db(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    da[i] = upstream[i] * b[i];
    db[i] = upstream[i] * a[i];
  }
  return {std::move(da), std::move(db)};
}

// Gradient of CE(softmax(logits), y) with respect to the logits: p - y.
inline Vec softmax_ce_backward(std::span<const double> probabilities,
                               std::span<const double> label) {
  if (probabilities.size() != label.size())
    throw Error(ErrorCode::kDimension, "softmax_ce_backward: size mismatch");
  Vec d(probabilities.size());
  for (std::size_t i = 0; i < probabilities.size(); ++i)
    d[i] = probabilities[i] - label[i];
  return d;
}

// --- Adam -------------------------------------------------------------------

// Mutable view over one parameter tensor (weights or bias of some layer).
struct ParamView {
  float* data = nullptr;
  std::size_t size = 0;
};

struct AdamState {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long t = 0;
  std::vector<std::vector<double>> m;  // first moments, one entry per tensor
  std::vector<std::vector<double>> v;  // second moments

  static AdamState create(std::span<const ParamView> params, double lr,
                          double beta1 = 0.9, double beta2 = 0.999,
                          double epsilon = 1e-8) {
    AdamState state;
    state.lr = lr;
    state.beta1 = beta1;
    state.beta2 = beta2;
    state.epsilon = epsilon;
    for (const ParamView& p : params) {
      state.m.emplace_back(p.size, 0.0);
      state.v.emplace_back(p.size, 0.0);
    }
    return state;
  }
};

// Standard Adam with bias correction. `grads` must be shaped like `params`.
inline void adam_step(std::span<const ParamView> params,
                      std::span<const std::vector<double>> grads,
                      AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw Error(ErrorCode::kDimension, "adam_step: tensor count mismatch");
  state.t += 1;
  double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const ParamView& p = params[k];
    const std::vector<double>& g = grads[k];
    if (g.size() != p.size || state.m[k].size() != p.size)
      throw Error(ErrorCode::kDimension,
                  Msg() << "adam_step: tensor " << k << " shape mismatch");
    std::vector<double>& m = state.m[k];
    std::vector<double>& v = state.v[k];
    for (std::size_t i = 0; i < p.size; ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      double m_hat = m[i] / bc1;
      double v_hat = v[i] / bc2;
      double updated = static_cast<double>(p.data[i]) -
                       state.lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
      p.data[i] = static_cast<float>(updated);
    }
  }
}

}  // namespace fuseid

#endif  // FUSEID_NETCORE_HPP_
