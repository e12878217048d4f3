// fuseid/svm.hpp

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

// Kernel SVM with one-vs-one multiclass decomposition.
//
// The binary solver is SMO with maximal-violating-pair working set selection
// on the dual
//
//   min_a  f(a) = 1/2 a^T Q a - e^T a,   0 <= a_i <= C,  y^T a = 0
//
// where Q_ij = y_i y_j K(x_i, x_j). The gradient G = Q a - e is kept
// incrementally. With
//
//   m = max { -y_i G_i : i in I_up },   M = min { -y_i G_i : i in I_low }
//   I_up  = { i : y_i = +1, a_i < C } u { i : y_i = -1, a_i > 0 }
//   I_low = { i : y_i = +1, a_i > 0 } u { i : y_i = -1, a_i < C }
//
// the KKT conditions hold up to `tol` when m - M <= tol, and the bias of the
// decision function f(x) = sum_i a_i y_i K(x_i, x) + b satisfies m <= b <= M.
//
// FUSESVM1 layout (little-endian):
//   bytes 0..7  magic "FUSESVM1"
//   u32         header length
//   ...         UTF-8 JSON header (kernel, regularization, normalization
//               stats as doubles, per-machine class pair and SV count)
//   ...         per machine, in header order: f32 dual coefficients, f32
//               support vectors row-major, f32 bias

#ifndef FUSEID_SVM_HPP_
#define FUSEID_SVM_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "fuseid/binio.hpp"
#include "fuseid/common.hpp"
#include "fuseid/features.hpp"
#include "fuseid/netcore.hpp"

namespace fuseid {

constexpr char kSvmMagic[8] = {'F', 'U', 'S', 'E', 'S', 'V', 'M', '1'};
constexpr std::uint32_t kSvmFormatVersion = 1;

// Hold the full Gram matrix in memory up to this many points.
constexpr std::size_t kFullGramLimit = 4096;

constexpr std::size_t kMaxPairUpdates = 10000;

enum class KernelKind { kLinear, kPoly, kRbf };

inline const char* kernel_name(KernelKind kind) {
  switch (kind) {
    case KernelKind::kLinear: return "linear";
    case KernelKind::kPoly: return "poly";
    case KernelKind::kRbf: return "rbf";
  }
  throw Error(ErrorCode::kConfig, "unknown kernel kind");
}

inline KernelKind kernel_from_name(const std::string& name) {
  if (name == "linear") return KernelKind::kLinear;
  if (name == "poly") return KernelKind::kPoly;
  if (name == "rbf") return KernelKind::kRbf;
  throw Error(ErrorCode::kConfig, Msg() << "unknown kernel: " << name);
}

struct KernelSpec {
  KernelKind kind = KernelKind::kPoly;
  int degree = 3;
  double gamma = 0.0;  // 0 resolves to 1/dim when training starts
  double coef0 = 0.0;

  void validate() const {
    if (degree < 1)
      throw Error(ErrorCode::kConfig, "kernel degree must be >= 1");
    if (gamma < 0.0)
      throw Error(ErrorCode::kConfig, "kernel gamma must be >= 0");
  }

  KernelSpec resolved(std::size_t dim) const {
    KernelSpec spec = *this;
    if (spec.gamma == 0.0) spec.gamma = 1.0 / static_cast<double>(dim);
    return spec;
  }

  bool operator==(const KernelSpec&) const = default;
};

inline double kernel_eval(const KernelSpec& spec, std::span<const double> x,
                          std::span<const double> y) {
  if (x.size() != y.size())
    throw Error(ErrorCode::kDimension,
                Msg() << "kernel operands differ: " << x.size() << " vs "
                      << y.size());
  switch (spec.kind) {
    case KernelKind::kLinear: {
      double dot = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * y[i];
      return dot;
    }
    case KernelKind::kPoly: {
      double dot = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * y[i];
      return std::pow(spec.gamma * dot + spec.coef0, spec.degree);
    }
    case KernelKind::kRbf: {
      double sq = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        double d = x[i] - y[i];
        sq += d * d;
      }
      return std::exp(-spec.gamma * sq);
    }
  }
  throw Error(ErrorCode::kConfig, "unknown kernel kind");
}

// --- Feature normalization --------------------------------------------------

struct FeatureStats {
  std::vector<double> mean;
  std::vector<double> stddev;  // population form, floored at kStdFloor

  static constexpr double kStdFloor = 1e-8;

  bool operator==(const FeatureStats&) const = default;
};

inline FeatureStats compute_stats(const std::vector<std::vector<float>>& rows) {
  if (rows.empty())
    throw Error(ErrorCode::kEmpty, "no rows to compute stats from");
  std::size_t dim = rows[0].size();
  FeatureStats stats;
  stats.mean.assign(dim, 0.0);
  stats.stddev.assign(dim, 0.0);
  for (const auto& row : rows) {
    if (row.size() != dim)
      throw Error(ErrorCode::kDimension, "ragged feature rows");
    for (std::size_t d = 0; d < dim; ++d)
      stats.mean[d] += static_cast<double>(row[d]);
  }
  double inv_n = 1.0 / static_cast<double>(rows.size());
  for (std::size_t d = 0; d < dim; ++d) stats.mean[d] *= inv_n;
  for (const auto& row : rows)
    for (std::size_t d = 0; d < dim; ++d) {
      double diff = static_cast<double>(row[d]) - stats.mean[d];
      stats.stddev[d] += diff * diff;
    }
  for (std::size_t d = 0; d < dim; ++d)
    stats.stddev[d] = std::max(std::sqrt(stats.stddev[d] * inv_n),
                               FeatureStats::kStdFloor);
  return stats;
}

inline Vec apply_stats(const FeatureStats& stats, std::span<const float> row) {
  if (row.size() != stats.mean.size())
    throw Error(ErrorCode::kDimension,
                Msg() << "feature dim " << row.size() << " != stats dim "
                      << stats.mean.size());
  Vec out(row.size());
  for (std::size_t d = 0; d < row.size(); ++d)
    out[d] = (static_cast<double>(row[d]) - stats.mean[d]) / stats.stddev[d];
  return out;
}

inline std::vector<Vec> apply_stats(const FeatureStats& stats,
                                    const std::vector<std::vector<float>>& rows) {
  std::vector<Vec> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(apply_stats(stats, row));
  return out;
}

// --- Binary machine ---------------------------------------------------------

// One trained binary decision function. Support vectors and coefficients are
// stored as f32, matching the on-disk representation, so a save/load round
// trip reproduces decisions exactly. dual_coefs[i] already includes the label
// sign: decision(x) = sum_i dual_coefs[i] K(sv_i, x) + bias.
struct BinaryMachine {
  int pos_class = 0;
  int neg_class = 0;
  std::vector<std::vector<float>> support_vectors;
  std::vector<float> dual_coefs;
  float bias = 0.0f;

  double decision(const KernelSpec& kernel, std::span<const double> x) const {
    double sum = 0.0;
    Vec sv(x.size());
    for (std::size_t i = 0; i < support_vectors.size(); ++i) {
      const std::vector<float>& row = support_vectors[i];
      for (std::size_t d = 0; d < row.size(); ++d)
        sv[d] = static_cast<double>(row[d]);
      sum += static_cast<double>(dual_coefs[i]) * kernel_eval(kernel, sv, x);
    }
    return sum + static_cast<double>(bias);
  }
};

struct BinaryTrainResult {
  BinaryMachine machine;
  std::vector<double> alphas;  // full-precision duals, one per training point
  double bias = 0.0;
  double objective = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
};

namespace detail {

class GramCache {
 public:
  GramCache(const std::vector<Vec>& points, const KernelSpec& kernel)
      : points_(points), kernel_(kernel), n_(points.size()) {
    if (n_ <= kFullGramLimit) {
      full_.resize(n_ * n_);
      for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
          double k = kernel_eval(kernel_, points_[i], points_[j]);
          full_[i * n_ + j] = k;
          full_[j * n_ + i] = k;
        }
    }
  }

  // Returns row i of the kernel matrix. `scratch` backs the row when the
  // matrix is not held in memory; two live rows need two scratch buffers.
  const double* row(std::size_t i, std::vector<double>& scratch) const {
    if (!full_.empty()) return full_.data() + i * n_;
    scratch.resize(n_);
    for (std::size_t j = 0; j < n_; ++j)
      scratch[j] = kernel_eval(kernel_, points_[i], points_[j]);
    return scratch.data();
  }

 private:
  const std::vector<Vec>& points_;
  KernelSpec kernel_;
  std::size_t n_;
  std::vector<double> full_;
};

}  // namespace detail

// Trains one binary machine on pre-normalized points with labels in {-1,+1}.
// The kernel must already be resolved (gamma > 0).
inline BinaryTrainResult train_binary(const std::vector<Vec>& points,
                                      const std::vector<int>& labels,
                                      const KernelSpec& kernel, double c,
                                      double tol = 1e-3,
                                      std::size_t max_pair_updates = kMaxPairUpdates) {
  if (points.size() != labels.size())
    throw Error(ErrorCode::kValidation, "point/label count mismatch");
  if (points.empty()) throw Error(ErrorCode::kEmpty, "no training points");
  if (c <= 0.0) throw Error(ErrorCode::kConfig, "regularization C must be > 0");
  if (tol <= 0.0) throw Error(ErrorCode::kConfig, "tolerance must be > 0");
  bool has_pos = false, has_neg = false;
  for (int y : labels) {
    if (y == 1) has_pos = true;
    else if (y == -1) has_neg = true;
    else throw Error(ErrorCode::kValidation, "labels must be -1 or +1");
  }
  if (!has_pos || !has_neg)
    throw Error(ErrorCode::kClass, "binary training needs both classes");

  std::size_t n = points.size();
  detail::GramCache gram(points, kernel);
  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n, -1.0);  // G = Q a - e with a = 0
  std::vector<double> scratch_i, scratch_j;

  auto in_up = [&](std::size_t t) {
    return (labels[t] == 1 && alpha[t] < c) || (labels[t] == -1 && alpha[t] > 0.0);
  };
  auto in_low = [&](std::size_t t) {
    return (labels[t] == 1 && alpha[t] > 0.0) || (labels[t] == -1 && alpha[t] < c);
  };

  BinaryTrainResult result;
  bool converged = false;
  std::size_t iter = 0;
  double m = 0.0, big_m = 0.0;
  for (; iter < max_pair_updates; ++iter) {
    m = -std::numeric_limits<double>::infinity();
    big_m = std::numeric_limits<double>::infinity();
    std::size_t i = n, j = n;
    for (std::size_t t = 0; t < n; ++t) {
      double v = -labels[t] * grad[t];
      if (in_up(t) && v > m) {
        m = v;
        i = t;
      }
      if (in_low(t) && v < big_m) {
        big_m = v;
        j = t;
      }
    }
    if (i == n || j == n || m - big_m <= tol) {
      converged = true;
      break;
    }

    const double* row_i = gram.row(i, scratch_i);
    const double* row_j = gram.row(j, scratch_j);
    double eta = row_i[i] + row_j[j] - 2.0 * row_i[j];
    double step = (m - big_m) / std::max(eta, 1e-12);
    double step_max = std::min(
        labels[i] == 1 ? c - alpha[i] : alpha[i],
        labels[j] == 1 ? alpha[j] : c - alpha[j]);
    step = std::min(step, step_max);

    double delta_i = labels[i] * step;
    double delta_j = -labels[j] * step;
    alpha[i] += delta_i;
    alpha[j] += delta_j;
    alpha[i] = std::clamp(alpha[i], 0.0, c);
    alpha[j] = std::clamp(alpha[j], 0.0, c);
    for (std::size_t t = 0; t < n; ++t)
      grad[t] += labels[t] * (labels[i] * row_i[t] * delta_i +
                              labels[j] * row_j[t] * delta_j);
  }

  // Bias: free support vectors pin it exactly; otherwise the KKT bracket
  // [m, M] collapses to its midpoint.
  double bias_sum = 0.0;
  std::size_t bias_count = 0;
  for (std::size_t t = 0; t < n; ++t)
    if (alpha[t] > 0.0 && alpha[t] < c) {
      bias_sum += -labels[t] * grad[t];
      ++bias_count;
    }
  double bias = bias_count > 0 ? bias_sum / static_cast<double>(bias_count)
                               : 0.5 * (m + big_m);

  double objective = 0.0;
  for (std::size_t t = 0; t < n; ++t)
    objective += 0.5 * alpha[t] * (grad[t] - 1.0);

  result.alphas = alpha;
  result.bias = bias;
  result.objective = objective;
  result.converged = converged;
  result.iterations = iter;
  result.machine.bias = static_cast<float>(bias);
  for (std::size_t t = 0; t < n; ++t)
    if (alpha[t] > 0.0) {
      std::vector<float> sv(points[t].size());
      for (std::size_t d = 0; d < sv.size(); ++d)
        sv[d] = static_cast<float>(points[t][d]);
      result.machine.support_vectors.push_back(std::move(sv));
      result.machine.dual_coefs.push_back(
          static_cast<float>(labels[t] * alpha[t]));
    }
  return result;
}

// --- Multiclass model -------------------------------------------------------

struct SvmConfig {
  KernelSpec kernel;
  double regularization = 1.0;
  double tolerance = 1e-3;

  void validate() const {
    kernel.validate();
    if (regularization <= 0.0)
      throw Error(ErrorCode::kConfig, "regularization C must be > 0");
    if (tolerance <= 0.0)
      throw Error(ErrorCode::kConfig, "tolerance must be > 0");
  }
};

struct SvmModel {
  std::size_t num_classes = 0;
  std::size_t dim = 0;
  KernelSpec kernel;  // resolved gamma
  double regularization = 1.0;
  FeatureStats stats;
  std::vector<BinaryMachine> machines;  // (0,1),(0,2),...,(C-2,C-1)

  std::size_t expected_machine_count() const {
    return num_classes * (num_classes - 1) / 2;
  }
};

struct SvmTrainReport {
  std::size_t machines = 0;
  std::size_t unconverged = 0;
  std::size_t total_iterations = 0;
};

inline SvmModel train_svm(const FeatureSet& features, const SvmConfig& config,
                          SvmTrainReport* report = nullptr) {
  config.validate();
  features.validate();
  if (features.size() == 0)
    throw Error(ErrorCode::kEmpty, "no training features");

  int max_label = 0;
  for (int label : features.labels) max_label = std::max(max_label, label);
  std::size_t num_classes = static_cast<std::size_t>(max_label) + 1;
  if (num_classes < 2)
    throw Error(ErrorCode::kClass, "need at least 2 classes");
  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (std::size_t i = 0; i < features.size(); ++i)
    by_class[features.labels[i]].push_back(i);
  for (std::size_t cls = 0; cls < num_classes; ++cls)
    if (by_class[cls].empty())
      throw Error(ErrorCode::kClass,
                  Msg() << "class " << cls << " has no training samples");

  SvmModel model;
  model.num_classes = num_classes;
  model.dim = features.dim;
  model.kernel = config.kernel.resolved(features.dim);
  model.regularization = config.regularization;
  model.stats = compute_stats(features.vectors);
  std::vector<Vec> normalized = apply_stats(model.stats, features.vectors);

  SvmTrainReport local;
  for (std::size_t a = 0; a < num_classes; ++a)
    for (std::size_t b = a + 1; b < num_classes; ++b) {
      std::vector<Vec> subset;
      std::vector<int> labels;
      subset.reserve(by_class[a].size() + by_class[b].size());
      for (std::size_t idx : by_class[a]) {
        subset.push_back(normalized[idx]);
        labels.push_back(1);
      }
      for (std::size_t idx : by_class[b]) {
        subset.push_back(normalized[idx]);
        labels.push_back(-1);
      }
      BinaryTrainResult trained =
          train_binary(subset, labels, model.kernel, config.regularization,
                       config.tolerance);
      trained.machine.pos_class = static_cast<int>(a);
      trained.machine.neg_class = static_cast<int>(b);
      model.machines.push_back(std::move(trained.machine));
      ++local.machines;
      local.total_iterations += trained.iterations;
      if (!trained.converged) ++local.unconverged;
    }
  if (report != nullptr) *report = local;
  return model;
}

// Majority vote over all pairwise machines. Ties fall back to the summed
// absolute decision margin of the machines each tied class won, then to the
// lowest class index.
inline int predict(const SvmModel& model, std::span<const float> raw) {
  if (raw.size() != model.dim)
    throw Error(ErrorCode::kDimension,
                Msg() << "input dim " << raw.size() << " != model dim "
                      << model.dim);
  Vec x = apply_stats(model.stats, raw);
  std::vector<int> votes(model.num_classes, 0);
  std::vector<double> margin(model.num_classes, 0.0);
  for (const BinaryMachine& machine : model.machines) {
    double d = machine.decision(model.kernel, x);
    int winner = d > 0.0 ? machine.pos_class : machine.neg_class;
    ++votes[winner];
    margin[winner] += std::fabs(d);
  }
  int best = 0;
  for (std::size_t cls = 1; cls < model.num_classes; ++cls) {
    if (votes[cls] > votes[best] ||
        (votes[cls] == votes[best] && margin[cls] > margin[best]))
      best = static_cast<int>(cls);
  }
  return best;
}

inline std::vector<int> predict_all(const SvmModel& model,
                                    const std::vector<std::vector<float>>& rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(predict(model, row));
  return out;
}

// --- Serialization ----------------------------------------------------------

inline void save_svm(const SvmModel& model, const std::string& path) {
  if (model.machines.size() != model.expected_machine_count())
    throw Error(ErrorCode::kValidation,
                Msg() << "machine count " << model.machines.size()
                      << " != expected " << model.expected_machine_count());
  nlohmann::json j;
  j["format_version"] = kSvmFormatVersion;
  j["num_classes"] = model.num_classes;
  j["dim"] = model.dim;
  j["regularization"] = model.regularization;
  j["kernel"] = {{"type", kernel_name(model.kernel.kind)},
                 {"degree", model.kernel.degree},
                 {"gamma", model.kernel.gamma},
                 {"coef0", model.kernel.coef0}};
  j["stats"] = {{"mean", model.stats.mean}, {"stddev", model.stats.stddev}};
  nlohmann::json machines = nlohmann::json::array();
  for (const BinaryMachine& m : model.machines)
    machines.push_back({{"pos_class", m.pos_class},
                        {"neg_class", m.neg_class},
                        {"sv_count", m.support_vectors.size()}});
  j["machines"] = std::move(machines);
  std::string header = j.dump();

  BinaryWriter out(path);
  out.put_bytes(kSvmMagic, sizeof(kSvmMagic));
  out.put(static_cast<std::uint32_t>(header.size()));
  out.put_string(header);
  for (const BinaryMachine& m : model.machines) {
    out.put_floats(m.dual_coefs);
    for (const auto& sv : m.support_vectors) out.put_floats(sv);
    out.put(m.bias);
  }
  out.close();
}

inline SvmModel load_svm(const std::string& path) {
  BinaryReader in(path);
  char magic[8];
  in.get_bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kSvmMagic, sizeof(magic)) != 0)
    throw Error(ErrorCode::kFormat, Msg() << "not a FUSESVM1 file: " << path);
  auto header_len = in.get<std::uint32_t>();
  SvmModel model;
  std::vector<std::size_t> sv_counts;
  try {
    nlohmann::json j = nlohmann::json::parse(in.get_string(header_len));
    auto version = j.at("format_version").get<std::uint32_t>();
    if (version != kSvmFormatVersion)
      throw Error(ErrorCode::kVersion,
                  Msg() << "unsupported classifier format version " << version);
    model.num_classes = j.at("num_classes").get<std::size_t>();
    model.dim = j.at("dim").get<std::size_t>();
    model.regularization = j.at("regularization").get<double>();
    const nlohmann::json& k = j.at("kernel");
    model.kernel.kind = kernel_from_name(k.at("type").get<std::string>());
    model.kernel.degree = k.at("degree").get<int>();
    model.kernel.gamma = k.at("gamma").get<double>();
    model.kernel.coef0 = k.at("coef0").get<double>();
    model.stats.mean = j.at("stats").at("mean").get<std::vector<double>>();
    model.stats.stddev = j.at("stats").at("stddev").get<std::vector<double>>();
    for (const nlohmann::json& m : j.at("machines")) {
      BinaryMachine machine;
      machine.pos_class = m.at("pos_class").get<int>();
      machine.neg_class = m.at("neg_class").get<int>();
      sv_counts.push_back(m.at("sv_count").get<std::size_t>());
      model.machines.push_back(std::move(machine));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat,
                Msg() << "bad classifier header: " << e.what());
  }
  if (model.num_classes < 2 ||
      model.machines.size() != model.expected_machine_count())
    throw Error(ErrorCode::kFormat,
                Msg() << "inconsistent machine count in " << path);
  if (model.stats.mean.size() != model.dim ||
      model.stats.stddev.size() != model.dim)
    throw Error(ErrorCode::kFormat,
                Msg() << "normalization stats dim mismatch in " << path);
  for (std::size_t i = 0; i < model.machines.size(); ++i) {
    BinaryMachine& machine = model.machines[i];
    machine.dual_coefs.resize(sv_counts[i]);
    in.get_floats(machine.dual_coefs);
    machine.support_vectors.assign(sv_counts[i], std::vector<float>(model.dim));
    for (auto& sv : machine.support_vectors) in.get_floats(sv);
    machine.bias = in.get<float>();
  }
  if (!in.at_eof())
    throw Error(ErrorCode::kFormat,
                Msg() << "trailing bytes in classifier file: " << path);
  return model;
}

}  // namespace fuseid

#endif  // FUSEID_SVM_HPP_
