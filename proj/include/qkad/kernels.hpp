#pragma once

// Kernels over AR feature vectors: classical RBF, the quantum fidelity kernel,
// training-set standardisation, and Gram matrix assembly with a PSD check.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "qkad/armodel.hpp"
#include "qkad/error.hpp"
#include "qkad/quantumsim.hpp"

namespace qkad {

struct RbfParams {
  double gamma = 0.1;
  friend bool operator==(const RbfParams&, const RbfParams&) = default;
};

/// By default the quantum kernel encodes raw AR coefficients (theta = scale * phi).
/// With standardisation on, theta = scale * x is periodic in x with period
/// 2 pi / scale, so unbounded z-scores alias; `encoding_range` > 0 divides the
/// z-scores by the range and clamps them to [-1, 1] first.
struct QuantumParams {
  FeatureMapConfig feature_map{};
  double encoding_range = 0.0;
  friend bool operator==(const QuantumParams&, const QuantumParams&) = default;
};

enum class KernelKind { rbf, quantum };

inline constexpr std::string_view to_string(KernelKind k) noexcept {
  return k == KernelKind::rbf ? "rbf" : "quantum";
}

struct KernelConfig {
  std::variant<RbfParams, QuantumParams> params{RbfParams{}};
  bool standardize = true;

  static KernelConfig rbf(double gamma) { return {RbfParams{gamma}, true}; }
  static KernelConfig quantum(FeatureMapConfig fm = {}) { return {QuantumParams{fm, 0.0}, false}; }
  static KernelConfig quantum_standardized(FeatureMapConfig fm = {}, double encoding_range = 4.0) {
    return {QuantumParams{fm, encoding_range}, true};
  }

  KernelKind kind() const noexcept {
    return std::holds_alternative<RbfParams>(params) ? KernelKind::rbf : KernelKind::quantum;
  }
  void validate() const {
    if (const auto* r = std::get_if<RbfParams>(&params)) {
      detail::require(r->gamma > 0.0 && std::isfinite(r->gamma), Errc::invalid_argument,
                      "gamma must be positive");
    } else {
      const auto& q = std::get<QuantumParams>(params);
      q.feature_map.validate();
      detail::require(q.encoding_range >= 0.0, Errc::invalid_argument, "encoding_range < 0");
    }
  }
  friend bool operator==(const KernelConfig&, const KernelConfig&) = default;
};

// ---------------------------------------------------------------------------
// Standardizer
// ---------------------------------------------------------------------------

struct Standardizer {
  std::vector<double> means;
  std::vector<double> stds;
  std::vector<bool> degenerate;  // std was zero and replaced by 1

  std::size_t dim() const noexcept { return means.size(); }

  std::vector<double> transform(std::span<const double> x) const {
    detail::require(x.size() == means.size(), Errc::dimension_mismatch, "standardizer dimension");
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - means[i]) / stds[i];
    return out;
  }

  static Standardizer identity(std::size_t d) {
    return {std::vector<double>(d, 0.0), std::vector<double>(d, 1.0), std::vector<bool>(d, false)};
  }
  friend bool operator==(const Standardizer&, const Standardizer&) = default;
};

/// Per-dimension mean and population std (1/N) of the training set.
inline Standardizer fit_standardizer(std::span<const FeatureVector> train) {
  detail::require(!train.empty(), Errc::too_few_samples, "empty training set");
  const std::size_t d = train.front().dim();
  detail::require(d >= 1, Errc::invalid_argument, "zero-dimensional features");
  Standardizer s{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0), std::vector<bool>(d)};
  for (const auto& fv : train) {
    detail::require(fv.dim() == d, Errc::dimension_mismatch, "ragged training set");
    for (std::size_t i = 0; i < d; ++i) s.means[i] += fv.values[i];
  }
  const double n = double(train.size());
  for (auto& m : s.means) m /= n;
  for (const auto& fv : train) {
    for (std::size_t i = 0; i < d; ++i) {
      const double c = fv.values[i] - s.means[i];
      s.stds[i] += c * c;
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    s.stds[i] = std::sqrt(s.stds[i] / n);
    if (!(s.stds[i] > 0.0)) {
      s.stds[i] = 1.0;
      s.degenerate[i] = true;
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Pointwise kernels
// ---------------------------------------------------------------------------

/// exp(-gamma * ||x - y||^2)
inline double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma) {
  detail::require(x.size() == y.size(), Errc::dimension_mismatch, "rbf operands");
  detail::require(gamma > 0.0, Errc::invalid_argument, "gamma must be positive");
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

/// Fidelity of the two feature-map states; inputs are used as given.
inline double quantum_kernel(std::span<const double> x, std::span<const double> y,
                             const FeatureMapConfig& cfg) {
  return fidelity(feature_map_state(x, cfg), feature_map_state(y, cfg));
}

/// Maps a standardised vector to feature-map inputs.
inline std::vector<double> encode_angles(std::span<const double> standardized,
                                         double encoding_range) {
  std::vector<double> out(standardized.begin(), standardized.end());
  if (encoding_range > 0.0) {
    for (double& v : out) v = std::clamp(v / encoding_range, -1.0, 1.0);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gram matrices
// ---------------------------------------------------------------------------

inline constexpr double kPsdTolerance = -1e-8;

class GramMatrix {
 public:
  GramMatrix(Eigen::MatrixXd values, KernelConfig config, Standardizer standardizer,
             std::vector<std::string> sample_ids, double min_eigenvalue)
      : values_(std::move(values)),
        config_(std::move(config)),
        standardizer_(std::move(standardizer)),
        sample_ids_(std::move(sample_ids)),
        min_eigenvalue_(min_eigenvalue) {}

  const Eigen::MatrixXd& values() const noexcept { return values_; }
  const KernelConfig& config() const noexcept { return config_; }
  const Standardizer& standardizer() const noexcept { return standardizer_; }
  const std::vector<std::string>& sample_ids() const noexcept { return sample_ids_; }
  double min_eigenvalue() const noexcept { return min_eigenvalue_; }
  Eigen::Index size() const noexcept { return values_.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return values_(i, j); }

 private:
  Eigen::MatrixXd values_;
  KernelConfig config_;
  Standardizer standardizer_;
  std::vector<std::string> sample_ids_;
  double min_eigenvalue_;
};

namespace detail {

inline void check_dims(std::span<const FeatureVector> xs, std::size_t d) {
  for (const auto& fv : xs) require(fv.dim() == d, Errc::dimension_mismatch, "feature dimension");
}

inline std::vector<std::vector<double>> standardized(std::span<const FeatureVector> xs,
                                                     const KernelConfig& cfg,
                                                     const Standardizer& std_) {
  std::vector<std::vector<double>> out;
  out.reserve(xs.size());
  for (const auto& fv : xs) {
    out.push_back(cfg.standardize ? std_.transform(fv.values) : fv.values);
  }
  return out;
}

// Evaluates k(a_i, b_j) for all pairs. Each entry is computed independently,
// so the result does not depend on evaluation order.
inline Eigen::MatrixXd kernel_block(std::span<const FeatureVector> a,
                                    std::span<const FeatureVector> b, const KernelConfig& cfg,
                                    const Standardizer& std_, bool symmetric) {
  cfg.validate();
  const auto za = standardized(a, cfg, std_);
  const auto zb = symmetric ? za : standardized(b, cfg, std_);
  Eigen::MatrixXd k(Eigen::Index(a.size()), Eigen::Index(b.size()));

  if (const auto* r = std::get_if<RbfParams>(&cfg.params)) {
    for (Eigen::Index i = 0; i < k.rows(); ++i) {
      for (Eigen::Index j = symmetric ? i : 0; j < k.cols(); ++j) {
        k(i, j) = rbf_kernel(za[std::size_t(i)], zb[std::size_t(j)], r->gamma);
        if (symmetric) k(j, i) = k(i, j);
      }
    }
  } else {
    const auto& q = std::get<QuantumParams>(cfg.params);
    auto states = [&](const std::vector<std::vector<double>>& zs) {
      std::vector<QuantumState> out;
      out.reserve(zs.size());
      for (const auto& z : zs) {
        out.push_back(feature_map_state(encode_angles(z, q.encoding_range), q.feature_map));
      }
      return out;
    };
    const auto sa = states(za);
    const auto sb = symmetric ? sa : states(zb);
    for (Eigen::Index i = 0; i < k.rows(); ++i) {
      for (Eigen::Index j = symmetric ? i : 0; j < k.cols(); ++j) {
        k(i, j) = fidelity(sa[std::size_t(i)], sb[std::size_t(j)]);
        if (symmetric) k(j, i) = k(i, j);
      }
    }
  }
  if (symmetric) k.diagonal().setOnes();
  return k;
}

}  // namespace detail

inline double min_eigenvalue(const Eigen::MatrixXd& symmetric) {
  if (symmetric.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

/// Symmetric kernel matrix over `xs` with unit diagonal; throws psd_violation if
/// the smallest eigenvalue falls below -1e-8.
inline GramMatrix gram(std::span<const FeatureVector> xs, const KernelConfig& cfg,
                       const Standardizer& std_, std::vector<std::string> sample_ids = {}) {
  detail::require(!xs.empty(), Errc::too_few_samples, "empty sample set");
  detail::check_dims(xs, xs.front().dim());
  if (sample_ids.empty()) {
    for (std::size_t i = 0; i < xs.size(); ++i) sample_ids.push_back(std::to_string(i));
  }
  detail::require(sample_ids.size() == xs.size(), Errc::dimension_mismatch, "sample_ids length");
  Eigen::MatrixXd k = detail::kernel_block(xs, xs, cfg, std_, true);
  for (Eigen::Index i = 0; i < k.size(); ++i) {
    detail::require(std::isfinite(k.data()[i]), Errc::non_finite, "kernel value");
  }
  const double lambda_min = min_eigenvalue(k);
  detail::require(lambda_min >= kPsdTolerance, Errc::psd_violation,
                  "min eigenvalue " + std::to_string(lambda_min));
  return GramMatrix(std::move(k), cfg, std_, std::move(sample_ids), lambda_min);
}

/// Rectangular kernel block, rows = test samples, columns = training samples.
inline Eigen::MatrixXd gram_cross(std::span<const FeatureVector> test,
                                  std::span<const FeatureVector> train, const KernelConfig& cfg,
                                  const Standardizer& std_) {
  if (!train.empty()) {
    detail::check_dims(train, train.front().dim());
    detail::check_dims(test, train.front().dim());
  }
  return detail::kernel_block(test, train, cfg, std_, false);
}

/// Row-major CSV with the sample ids as header.
inline std::string gram_to_csv(const GramMatrix& g) {
  std::string out;
  for (std::size_t i = 0; i < g.sample_ids().size(); ++i) {
    if (i) out += ',';
    out += g.sample_ids()[i];
  }
  out += '\n';
  char buf[32];
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    for (Eigen::Index j = 0; j < g.size(); ++j) {
      if (j) out += ',';
      std::snprintf(buf, sizeof buf, "%.6g", g(i, j));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace qkad
