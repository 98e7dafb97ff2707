#pragma once

// AR(p) estimation: biased autocovariance, Levinson-Durbin recursion, a direct
// Toeplitz solve used as a cross-check, and AIC/BIC order selection.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "qkad/error.hpp"
#include "qkad/signal.hpp"

namespace qkad {

/// y_t = c + sum_i phi_i y_{t-i} + e_t, e_t ~ WN(sigma2).
/// Segments are centred before fitting, so the stored intercept is 0.
struct ARModel {
  int order = 0;
  double intercept = 0.0;
  std::vector<double> phi;
  double sigma2 = 0.0;
};

/// Machine states of the scene a feature vector was extracted from.
struct SceneLabel {
  int con_state = 0;
  int cha_state = 0;

  bool is_normal() const noexcept { return con_state == 0 && cha_state == 0; }
  friend bool operator==(const SceneLabel&, const SceneLabel&) = default;
};

struct FeatureVector {
  std::vector<double> values;
  std::optional<SceneLabel> source_label;

  std::size_t dim() const noexcept { return values.size(); }
};

struct Autocovariance {
  std::vector<double> values;  // gamma(0..max_lag)
  double mean = 0.0;
  bool degenerate = false;  // gamma(0) == 0, i.e. constant input
};

/// Biased estimator gamma(k) = (1/N) sum_{t=k}^{N-1} (y_t - m)(y_{t-k} - m).
inline Autocovariance autocovariance(std::span<const double> y, std::size_t max_lag) {
  detail::require(max_lag < y.size(), Errc::invalid_argument, "max_lag must be < series length");
  const double n = double(y.size());
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= n;

  std::vector<double> centred(y.size());
  for (std::size_t t = 0; t < y.size(); ++t) centred[t] = y[t] - mean;

  Autocovariance out;
  out.mean = mean;
  out.values.assign(max_lag + 1, 0.0);
  for (std::size_t k = 0; k <= max_lag; ++k) {
    double acc = 0.0;
    for (std::size_t t = k; t < y.size(); ++t) acc += centred[t] * centred[t - k];
    out.values[k] = acc / n;
  }
  // A constant series leaves only rounding residue after centring.
  const bool constant = std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; });
  out.degenerate = constant || !(out.values[0] > 0.0);
  if (constant) std::fill(out.values.begin(), out.values.end(), 0.0);
  return out;
}

inline Autocovariance autocovariance(const TimeSeries& ts, std::size_t max_lag) {
  return autocovariance(ts.samples(), max_lag);
}

namespace detail {

struct LevinsonPath {
  std::vector<double> phi;
  std::vector<double> errors;  // prediction-error variance after orders 1..p
};

inline LevinsonPath levinson_path(std::span<const double> acov, int p) {
  require(p >= 1, Errc::invalid_argument, "order must be positive");
  require(acov.size() >= std::size_t(p) + 1, Errc::invalid_argument, "need p+1 autocovariances");
  require(acov[0] > 0.0, Errc::degenerate_series, "gamma(0) must be positive");

  const double floor = -1e-12 * acov[0];
  LevinsonPath out;
  out.errors.reserve(std::size_t(p));
  std::vector<double> a;
  std::vector<double> prev;
  double err = acov[0];
  for (int k = 1; k <= p; ++k) {
    require(err > 0.0, Errc::singular_system,
            "prediction error vanished at order " + std::to_string(k - 1));
    double acc = acov[std::size_t(k)];
    for (int j = 1; j < k; ++j) acc -= a[std::size_t(j - 1)] * acov[std::size_t(k - j)];
    const double reflection = acc / err;

    prev = a;
    a.push_back(reflection);
    for (int j = 1; j < k; ++j) {
      a[std::size_t(j - 1)] = prev[std::size_t(j - 1)] - reflection * prev[std::size_t(k - j - 1)];
    }
    err *= (1.0 - reflection * reflection);
    require(err >= floor, Errc::singular_system, "negative prediction error; autocovariance not PSD");
    err = std::max(err, 0.0);
    out.errors.push_back(err);
  }
  out.phi = std::move(a);
  return out;
}

}  // namespace detail

/// O(p^2) solve of the order-p Yule-Walker system.
inline ARModel levinson_durbin(std::span<const double> acov, int p) {
  auto path = detail::levinson_path(acov, p);
  return ARModel{p, 0.0, std::move(path.phi), path.errors.back()};
}

/// Prediction-error variance for every order 1..p from one recursion.
inline std::vector<double> prediction_errors(std::span<const double> acov, int p) {
  return detail::levinson_path(acov, p).errors;
}

/// Dense LU solve of T phi = r with T[i][j] = acov[|i-j|], r[i] = acov[i+1].
inline std::vector<double> yule_walker_direct(std::span<const double> acov, int p) {
  detail::require(p >= 1, Errc::invalid_argument, "order must be positive");
  detail::require(acov.size() >= std::size_t(p) + 1, Errc::invalid_argument,
                  "need p+1 autocovariances");
  Eigen::MatrixXd t(p, p);
  Eigen::VectorXd r(p);
  for (int i = 0; i < p; ++i) {
    r(i) = acov[std::size_t(i + 1)];
    for (int j = 0; j < p; ++j) t(i, j) = acov[std::size_t(std::abs(i - j))];
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(t);
  lu.setThreshold(1e-14);
  detail::require(lu.isInvertible(), Errc::singular_system, "Toeplitz system is singular");
  Eigen::VectorXd phi = lu.solve(r);
  return {phi.data(), phi.data() + p};
}

enum class InformationCriterion { aic, bic };

struct OrderSelection {
  int order = 1;
  std::vector<double> criterion_values;  // index k holds order k+1
};

/// AIC(p) = N ln(sigma2_p) + 2p, BIC(p) = N ln(sigma2_p) + p ln N; ties go to the smaller p.
inline OrderSelection select_order(std::span<const double> y, int p_max,
                                   InformationCriterion criterion = InformationCriterion::aic) {
  detail::require(p_max >= 1, Errc::invalid_argument, "p_max must be positive");
  detail::require(2 * std::size_t(p_max) < y.size(), Errc::invalid_argument,
                  "p_max must be < N/2");
  const auto acov = autocovariance(y, std::size_t(p_max));
  detail::require(!acov.degenerate, Errc::degenerate_series, "constant series");

  const auto errors = prediction_errors(acov.values, p_max);
  const double n = double(y.size());
  const double penalty = criterion == InformationCriterion::aic ? 2.0 : std::log(n);
  OrderSelection out;
  out.criterion_values.reserve(std::size_t(p_max));
  double best = std::numeric_limits<double>::infinity();
  for (int p = 1; p <= p_max; ++p) {
    const double value = n * std::log(errors[std::size_t(p - 1)]) + penalty * p;
    out.criterion_values.push_back(value);
    if (value < best) {
      best = value;
      out.order = p;
    }
  }
  return out;
}

inline OrderSelection select_order(const TimeSeries& ts, int p_max,
                                   InformationCriterion criterion = InformationCriterion::aic) {
  return select_order(ts.samples(), p_max, criterion);
}

/// Fits AR(p) on the mean-removed series.
inline ARModel fit_ar(std::span<const double> y, int p) {
  detail::require(p >= 1, Errc::invalid_argument, "order must be positive");
  detail::require(std::size_t(p) < y.size(), Errc::invalid_argument, "order must be < length");
  const auto acov = autocovariance(y, std::size_t(p));
  detail::require(!acov.degenerate, Errc::degenerate_series, "constant series");
  return levinson_durbin(acov.values, p);
}

/// phi_1..phi_p of the fitted model, in lag order.
inline FeatureVector extract_features(const TimeSeries& ts, int p) {
  auto model = fit_ar(ts.samples(), p);
  return FeatureVector{std::move(model.phi), std::nullopt};
}

}  // namespace qkad
