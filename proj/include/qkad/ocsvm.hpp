#pragma once

// One-class nu-SVM on a precomputed Gram matrix.
//
// Dual: min 1/2 a'Ka  s.t.  0 <= a_i <= 1/(nu n),  sum a_i = 1.
// Solved by SMO with the maximal-violating-pair working set.

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qkad/error.hpp"
#include "qkad/kernels.hpp"

namespace qkad {

struct OcSvmConfig {
  double nu = 0.1;
  double tol = 1e-6;
  long max_iter = 100000;

  void validate() const {
    detail::require(nu > 0.0 && nu <= 1.0, Errc::invalid_argument, "nu must be in (0, 1]");
    detail::require(tol > 0.0, Errc::invalid_argument, "tol must be positive");
    detail::require(max_iter >= 1, Errc::invalid_argument, "max_iter must be positive");
  }
  friend bool operator==(const OcSvmConfig&, const OcSvmConfig&) = default;
};

struct OcSvmModel {
  std::vector<double> alphas;
  double rho = 0.0;
  std::vector<std::size_t> support_indices;
  OcSvmConfig config{};
  KernelConfig kernel_config{};
  Standardizer standardizer{};

  // Solver diagnostics.
  long iterations = 0;
  bool converged = true;
  double kkt_violation = 0.0;
  bool rho_from_bounds = false;  // no margin support vectors; rho taken between bound sets

  std::size_t n_train() const noexcept { return alphas.size(); }
  double upper_bound() const noexcept { return 1.0 / (config.nu * double(alphas.size())); }

  double objective(const Eigen::MatrixXd& k) const {
    Eigen::Map<const Eigen::VectorXd> a(alphas.data(), Eigen::Index(alphas.size()));
    return 0.5 * a.dot(k * a);
  }
};

namespace detail {

inline void warn(const std::string& message) { std::clog << "qkad warning: " << message << '\n'; }

}  // namespace detail

inline OcSvmModel train(const Eigen::MatrixXd& k, const OcSvmConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = k.rows();
  detail::require(n >= 1 && k.cols() == n, Errc::too_few_samples, "empty or non-square Gram");
  for (Eigen::Index i = 0; i < k.size(); ++i) {
    detail::require(std::isfinite(k.data()[i]), Errc::non_finite, "Gram entry");
  }

  const double upper = 1.0 / (cfg.nu * double(n));
  OcSvmModel m;
  m.config = cfg;
  m.alphas.assign(std::size_t(n), 0.0);

  // Feasible start: fill the first floor(nu n) coefficients to the bound.
  double remaining = 1.0;
  for (Eigen::Index i = 0; i < n && remaining > 0.0; ++i) {
    const double a = std::min(upper, remaining);
    m.alphas[std::size_t(i)] = a;
    remaining -= a;
  }

  Eigen::VectorXd grad = k * Eigen::Map<Eigen::VectorXd>(m.alphas.data(), n);
  auto& alpha = m.alphas;
  const double eps_bound = 1e-15;
  auto can_increase = [&](Eigen::Index t) { return alpha[std::size_t(t)] < upper - eps_bound; };
  auto can_decrease = [&](Eigen::Index t) { return alpha[std::size_t(t)] > eps_bound; };

  long iter = 0;
  double violation = 0.0;
  for (;; ++iter) {
    // i: steepest descent coordinate that can grow; j: highest gradient that can shrink.
    Eigen::Index i = -1;
    Eigen::Index j = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (can_increase(t) && (i < 0 || grad(t) < grad(i))) i = t;
      if (can_decrease(t) && (j < 0 || grad(t) > grad(j))) j = t;
    }
    violation = (i < 0 || j < 0) ? 0.0 : grad(j) - grad(i);
    if (violation < cfg.tol) break;
    if (iter >= cfg.max_iter) {
      m.converged = false;
      break;
    }

    double curvature = k(i, i) + k(j, j) - 2.0 * k(i, j);
    if (curvature <= 0.0) curvature = 1e-12;
    double step = (grad(j) - grad(i)) / curvature;
    step = std::min({step, upper - alpha[std::size_t(i)], alpha[std::size_t(j)]});

    alpha[std::size_t(i)] += step;
    alpha[std::size_t(j)] -= step;
    if (upper - alpha[std::size_t(i)] < eps_bound) alpha[std::size_t(i)] = upper;
    if (alpha[std::size_t(j)] < eps_bound) alpha[std::size_t(j)] = 0.0;
    grad += step * (k.col(i) - k.col(j));
  }
  m.iterations = iter;
  m.kkt_violation = violation;
  if (!m.converged) {
    detail::warn("one-class SVM hit max_iter=" + std::to_string(cfg.max_iter) +
                 " with KKT violation " + std::to_string(violation));
  }

  // Fresh gradient, summed in the same order as decision(), so a test point
  // identical to a training point reproduces its value exactly.
  for (Eigen::Index t = 0; t < n; ++t) {
    double acc = 0.0;
    for (Eigen::Index s = 0; s < n; ++s) acc += alpha[std::size_t(s)] * k(t, s);
    grad(t) = acc;
  }

  // rho: mean gradient over margin SVs; otherwise the midpoint of the bound sets.
  const double margin = cfg.tol;
  double free_min = std::numeric_limits<double>::infinity();
  double free_max = -free_min;
  double free_sum = 0.0;
  long free_count = 0;
  double at_upper_max = -std::numeric_limits<double>::infinity();
  double at_zero_min = std::numeric_limits<double>::infinity();
  for (Eigen::Index t = 0; t < n; ++t) {
    const double a = alpha[std::size_t(t)];
    if (a > margin && a < upper - margin) {
      free_sum += grad(t);
      ++free_count;
      free_min = std::min(free_min, grad(t));
      free_max = std::max(free_max, grad(t));
    } else if (a >= upper - margin) {
      at_upper_max = std::max(at_upper_max, grad(t));
    } else {
      at_zero_min = std::min(at_zero_min, grad(t));
    }
  }
  if (free_count > 0) {
    m.rho = std::clamp(free_sum / double(free_count), free_min, free_max);
  } else {
    m.rho_from_bounds = true;
    if (std::isfinite(at_upper_max) && std::isfinite(at_zero_min)) {
      m.rho = 0.5 * (at_upper_max + at_zero_min);
    } else {
      m.rho = std::isfinite(at_upper_max) ? at_upper_max : at_zero_min;
    }
  }
  // Margin SVs agree only to within tol; keep every point below the upper
  // bound on the normal side so that only bounded SVs can be training outliers.
  m.rho = std::min(m.rho, std::min(free_min, at_zero_min));

  for (Eigen::Index t = 0; t < n; ++t) {
    if (alpha[std::size_t(t)] > cfg.tol) m.support_indices.push_back(std::size_t(t));
  }
  return m;
}

/// Trains on a Gram matrix of normal-only training data.
inline OcSvmModel train(const GramMatrix& gram, const OcSvmConfig& cfg) {
  detail::require(gram.size() >= 2, Errc::too_few_samples, "need at least two training samples");
  auto m = train(gram.values(), cfg);
  m.kernel_config = gram.config();
  m.standardizer = gram.standardizer();
  return m;
}

/// f = sum_i a_i k_i - rho; f >= 0 is normal.
inline double decision(const OcSvmModel& model, std::span<const double> k_row) {
  detail::require(k_row.size() == model.alphas.size(), Errc::dimension_mismatch,
                  "kernel row length");
  double f = 0.0;
  for (std::size_t i = 0; i < k_row.size(); ++i) f += model.alphas[i] * k_row[i];
  return f - model.rho;
}

inline constexpr int kNormal = 0;
inline constexpr int kAnomaly = 1;

inline int label_of(double decision_value) noexcept {
  return decision_value < 0.0 ? kAnomaly : kNormal;
}

inline std::vector<int> predict_batch(const OcSvmModel& model, const Eigen::MatrixXd& cross_gram) {
  detail::require(cross_gram.rows() == 0 || cross_gram.cols() == Eigen::Index(model.n_train()),
                  Errc::dimension_mismatch, "cross-Gram column count");
  std::vector<int> out(std::size_t(cross_gram.rows()));
  std::vector<double> row(model.n_train());
  for (Eigen::Index r = 0; r < cross_gram.rows(); ++r) {
    for (Eigen::Index c = 0; c < cross_gram.cols(); ++c) row[std::size_t(c)] = cross_gram(r, c);
    out[std::size_t(r)] = label_of(decision(model, row));
  }
  return out;
}

/// A trained model bundled with its training features, so raw feature vectors
/// can be scored without the original Gram matrix.
struct Detector {
  OcSvmModel model;
  std::vector<FeatureVector> training;

  std::vector<double> decision_values(std::span<const FeatureVector> xs) const {
    const Eigen::MatrixXd kx = gram_cross(xs, training, model.kernel_config, model.standardizer);
    std::vector<double> out(xs.size());
    std::vector<double> row(training.size());
    for (Eigen::Index r = 0; r < kx.rows(); ++r) {
      for (Eigen::Index c = 0; c < kx.cols(); ++c) row[std::size_t(c)] = kx(r, c);
      out[std::size_t(r)] = decision(model, row);
    }
    return out;
  }

  std::vector<int> predict(std::span<const FeatureVector> xs) const {
    if (xs.empty()) return {};
    return predict_batch(model, gram_cross(xs, training, model.kernel_config, model.standardizer));
  }
};

/// Standardise on `train`, build the Gram matrix, solve.
inline Detector fit_detector(std::vector<FeatureVector> train_set, const KernelConfig& kernel,
                             const OcSvmConfig& cfg) {
  detail::require(!train_set.empty(), Errc::too_few_samples, "empty training set");
  const Standardizer std_ = kernel.standardize ? fit_standardizer(train_set)
                                               : Standardizer::identity(train_set.front().dim());
  const GramMatrix g = gram(train_set, kernel, std_);
  return Detector{train(g, cfg), std::move(train_set)};
}

}  // namespace qkad
