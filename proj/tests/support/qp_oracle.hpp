// tests/support/qp_oracle.hpp

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

// Independent reference solver for the SVM dual, used to cross-check SMO:
//
//   min  f(a) = 1/2 a^T Q a - e^T a
//   s.t. 0 <= a_i <= C,  y^T a = 0,   Q_ij = y_i y_j K(x_i, x_j)
//
// Projected gradient descent with step 1/L, L the Frobenius norm of Q (an
// upper bound on its spectral norm). The projection onto the box intersected
// with the hyperplane is computed by bisection on the shift lambda in
// clip(v + lambda*y, 0, C); the shifted constraint value is monotone in
// lambda. Termination is by KKT residual, the same max-violation quantity
// SMO uses, pushed four orders tighter than the solver under test.

#ifndef FUSEID_TESTS_QP_ORACLE_HPP_
#define FUSEID_TESTS_QP_ORACLE_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "fuseid/svm.hpp"

namespace fuseid {
namespace test {

struct QpOracleResult {
  std::vector<double> alphas;
  double bias = 0.0;
  double objective = 0.0;
  double kkt_residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

namespace qp_detail {

inline std::vector<double> project(const std::vector<double>& v,
                                   const std::vector<int>& labels, double c) {
  std::size_t n = v.size();
  auto shifted_sum = [&](double lambda) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double a = std::clamp(v[i] + lambda * labels[i], 0.0, c);
      s += labels[i] * a;
    }
    return s;
  };
  double span = c + 1.0;
  for (double x : v) span = std::max(span, std::fabs(x));
  double lo = -2.0 * span, hi = 2.0 * span;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (shifted_sum(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  double lambda = 0.5 * (lo + hi);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = std::clamp(v[i] + lambda * labels[i], 0.0, c);
  return out;
}

// Max KKT violation m - M, plus the feasible bias bracket midpoint.
inline double kkt_residual(const std::vector<double>& alpha,
                           const std::vector<double>& grad,
                           const std::vector<int>& labels, double c,
                           double* bias_lo, double* bias_hi) {
  double m = -std::numeric_limits<double>::infinity();
  double big_m = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < alpha.size(); ++t) {
    double v = -labels[t] * grad[t];
    bool up = (labels[t] == 1 && alpha[t] < c) ||
              (labels[t] == -1 && alpha[t] > 0.0);
    bool low = (labels[t] == 1 && alpha[t] > 0.0) ||
               (labels[t] == -1 && alpha[t] < c);
    if (up) m = std::max(m, v);
    if (low) big_m = std::min(big_m, v);
  }
  if (bias_lo != nullptr) *bias_lo = m;
  if (bias_hi != nullptr) *bias_hi = big_m;
  return m - big_m;
}

}  // namespace qp_detail

inline QpOracleResult solve_qp_reference(const std::vector<Vec>& points,
                                         const std::vector<int>& labels,
                                         const KernelSpec& kernel, double c,
                                         double kkt_tol = 1e-7,
                                         std::size_t max_iters = 500000) {
  std::size_t n = points.size();
  std::vector<double> q(n * n);
  double frob_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      double v = labels[i] * labels[j] * kernel_eval(kernel, points[i], points[j]);
      q[i * n + j] = v;
      q[j * n + i] = v;
      frob_sq += (i == j) ? v * v : 2.0 * v * v;
    }
  double step = 1.0 / std::max(std::sqrt(frob_sq), 1e-12);

  std::vector<double> alpha(n, 0.0), grad(n), trial(n);
  QpOracleResult result;
  double bias_lo = 0.0, bias_hi = 0.0;
  for (result.iterations = 0; result.iterations < max_iters;
       ++result.iterations) {
    for (std::size_t i = 0; i < n; ++i) {
      double g = -1.0;
      const double* row = q.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) g += row[j] * alpha[j];
      grad[i] = g;
    }
    result.kkt_residual =
        qp_detail::kkt_residual(alpha, grad, labels, c, &bias_lo, &bias_hi);
    if (result.kkt_residual <= kkt_tol) {
      result.converged = true;
      break;
    }
    for (std::size_t i = 0; i < n; ++i) trial[i] = alpha[i] - step * grad[i];
    alpha = qp_detail::project(trial, labels, c);
  }

  // Bias: mean of the exact values at free points, else the bracket midpoint.
  double bias_sum = 0.0;
  std::size_t free_count = 0;
  double margin = 1e-8 * c;
  for (std::size_t t = 0; t < n; ++t)
    if (alpha[t] > margin && alpha[t] < c - margin) {
      bias_sum += -labels[t] * grad[t];
      ++free_count;
    }
  result.bias = free_count > 0 ? bias_sum / static_cast<double>(free_count)
                               : 0.5 * (bias_lo + bias_hi);

  result.objective = 0.0;
  for (std::size_t t = 0; t < n; ++t)
    result.objective += 0.5 * alpha[t] * (grad[t] - 1.0);
  result.alphas = std::move(alpha);
  return result;
}

// Decision value of the oracle solution at one training point.
inline double oracle_decision(const QpOracleResult& oracle,
                              const std::vector<Vec>& points,
                              const std::vector<int>& labels,
                              const KernelSpec& kernel, std::span<const double> x) {
  double sum = oracle.bias;
  for (std::size_t j = 0; j < points.size(); ++j)
    if (oracle.alphas[j] > 0.0)
      sum += oracle.alphas[j] * labels[j] * kernel_eval(kernel, points[j], x);
  return sum;
}

// --- Random binary instances ------------------------------------------------

struct BinaryInstance {
  std::vector<Vec> points;
  std::vector<int> labels;
  KernelSpec kernel;  // gamma already resolved
  double c = 1.0;
};

// Two noisy Gaussian clusters, 6..25 points, 2..5 dims, mixed kernels and C.
// At least two points per class. Fully determined by `seed`.
inline BinaryInstance make_binary_instance(std::uint64_t seed) {
  Rng rng(derive_seed(seed, 99));
  BinaryInstance inst;
  std::size_t n = 6 + rng.uniform_index(20);
  std::size_t dim = 2 + rng.uniform_index(4);
  double separation = 0.8 + 1.8 * rng.uniform();

  Vec center(dim);
  for (double& v : center) v = rng.normal();
  double norm = l2_norm(center);
  for (double& v : center) v = v / std::max(norm, 1e-9) * separation;

  inst.points.reserve(n);
  inst.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    int label = (i < 2) ? 1 : (i < 4) ? -1 : (rng.uniform() < 0.5 ? 1 : -1);
    Vec x(dim);
    for (std::size_t d = 0; d < dim; ++d)
      x[d] = label * center[d] + rng.normal();
    inst.points.push_back(std::move(x));
    inst.labels.push_back(label);
  }

  double kernel_roll = rng.uniform();
  if (kernel_roll < 0.34) {
    inst.kernel.kind = KernelKind::kLinear;
    inst.kernel.gamma = 1.0;
  } else if (kernel_roll < 0.67) {
    inst.kernel.kind = KernelKind::kPoly;
    inst.kernel.degree = 2 + static_cast<int>(rng.uniform_index(2));
    inst.kernel.gamma = 1.0 / static_cast<double>(dim);
    inst.kernel.coef0 = rng.uniform() < 0.5 ? 0.0 : 1.0;
  } else {
    inst.kernel.kind = KernelKind::kRbf;
    inst.kernel.gamma = 0.5 / static_cast<double>(dim);
  }
  double c_roll = rng.uniform();
  inst.c = c_roll < 0.33 ? 0.5 : (c_roll < 0.67 ? 1.0 : 10.0);
  return inst;
}

// --- SMO vs oracle comparison -----------------------------------------------

struct SmoOracleComparison {
  double smo_objective = 0.0;
  double oracle_objective = 0.0;
  double objective_rel_diff = 0.0;
  bool predictions_match = false;
  bool smo_converged = false;
  bool oracle_converged = false;
};

inline SmoOracleComparison compare_smo_to_oracle(const BinaryInstance& inst) {
  BinaryTrainResult smo =
      train_binary(inst.points, inst.labels, inst.kernel, inst.c);
  QpOracleResult oracle =
      solve_qp_reference(inst.points, inst.labels, inst.kernel, inst.c);

  SmoOracleComparison cmp;
  cmp.smo_objective = smo.objective;
  cmp.oracle_objective = oracle.objective;
  double denom = std::max(
      {1.0, std::fabs(smo.objective), std::fabs(oracle.objective)});
  cmp.objective_rel_diff = std::fabs(smo.objective - oracle.objective) / denom;
  cmp.smo_converged = smo.converged;
  cmp.oracle_converged = oracle.converged;

  cmp.predictions_match = true;
  for (std::size_t t = 0; t < inst.points.size(); ++t) {
    double d_smo = smo.machine.decision(inst.kernel, inst.points[t]);
    double d_ref = oracle_decision(oracle, inst.points, inst.labels,
                                   inst.kernel, inst.points[t]);
    if ((d_smo > 0.0) != (d_ref > 0.0)) {
      cmp.predictions_match = false;
      break;
    }
  }
  return cmp;
}

}  // namespace test
}  // namespace fuseid

#endif  // FUSEID_TESTS_QP_ORACLE_HPP_
