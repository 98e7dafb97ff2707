#pragma once

// Slow, independent reference implementations used only by the tests.

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "qkad/armodel.hpp"
#include "qkad/quantumsim.hpp"

namespace oracle {

using CMat = Eigen::MatrixXcd;

inline CMat kron(const CMat& a, const CMat& b) {
  CMat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

inline CMat ry_matrix(double theta) {
  CMat m(2, 2);
  m << std::cos(theta / 2), -std::sin(theta / 2), std::sin(theta / 2), std::cos(theta / 2);
  return m;
}

// Single-qubit gate on qubit q of n; qubit 0 is the rightmost Kronecker factor.
inline CMat embed(const CMat& g, int q, int n) {
  CMat out = CMat::Identity(1, 1);
  for (int k = n - 1; k >= 0; --k) out = kron(out, k == q ? g : CMat::Identity(2, 2));
  return out;
}

// CNOT as P0 (x) I + P1 (x) X on the control/target factors.
inline CMat cnot_matrix(int control, int target, int n) {
  CMat p0 = CMat::Zero(2, 2), p1 = CMat::Zero(2, 2), x = CMat::Zero(2, 2);
  p0(0, 0) = 1;
  p1(1, 1) = 1;
  x(0, 1) = x(1, 0) = 1;
  CMat a = CMat::Identity(1, 1);
  CMat b = CMat::Identity(1, 1);
  for (int k = n - 1; k >= 0; --k) {
    a = kron(a, k == control ? p0 : CMat::Identity(2, 2));
    b = kron(b, k == control ? p1 : (k == target ? x : CMat::Identity(2, 2)));
  }
  return a + b;
}

inline Eigen::VectorXcd feature_map(const std::vector<double>& x, const qkad::FeatureMapConfig& cfg) {
  const int n = cfg.n_qubits;
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(1 << n);
  psi(0) = 1;
  for (int rep = 0; rep < cfg.repetitions; ++rep) {
    CMat rot = CMat::Identity(1, 1);
    for (int k = n - 1; k >= 0; --k) rot = kron(rot, ry_matrix(cfg.angle_scale * x[std::size_t(k)]));
    CMat ent = CMat::Identity(1 << n, 1 << n);
    for (int q = 0; q + 1 < n; ++q) ent = cnot_matrix(q, q + 1, n) * ent;
    if (cfg.entangler == qkad::Entangler::ring && n > 2) ent = cnot_matrix(n - 1, 0, n) * ent;
    psi = ent * rot * psi;
  }
  return psi;
}

// Euclidean projection onto {0 <= a <= c, sum a = 1} by bisection on the shift.
inline Eigen::VectorXd project_capped_simplex(const Eigen::VectorXd& v, double c) {
  double lo = v.minCoeff() - c - 1.0;
  double hi = v.maxCoeff() + 1.0;
  auto total = [&](double tau) { return (v.array() - tau).max(0.0).min(c).sum(); };
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (total(mid) > 1.0 ? lo : hi) = mid;
  }
  return (v.array() - 0.5 * (lo + hi)).max(0.0).min(c);
}

// Accelerated projected gradient (FISTA) on 0.5 a'Ka over the capped simplex.
inline double ocsvm_objective(const Eigen::MatrixXd& k, double nu, int iters = 20000) {
  const Eigen::Index n = k.rows();
  const double c = 1.0 / (nu * double(n));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k, Eigen::EigenvaluesOnly);
  const double step = 1.0 / std::max(es.eigenvalues().maxCoeff(), 1e-12);
  Eigen::VectorXd a = project_capped_simplex(Eigen::VectorXd::Constant(n, 1.0 / double(n)), c);
  Eigen::VectorXd y = a;
  double t = 1.0;
  double best = 0.5 * a.dot(k * a);
  for (int it = 0; it < iters; ++it) {
    const Eigen::VectorXd next = project_capped_simplex(y - step * (k * y), c);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = next + ((t - 1.0) / t_next) * (next - a);
    a = next;
    t = t_next;
    best = std::min(best, 0.5 * a.dot(k * a));
  }
  return best;
}

// Stationary AR(p) sample path with unit-variance Gaussian innovations.
inline std::vector<double> simulate_ar(const std::vector<double>& phi, std::size_t n,
                                       std::uint64_t seed, std::size_t burn_in = 2000) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> eps(0.0, 1.0);
  std::vector<double> y(n + burn_in, 0.0);
  for (std::size_t t = 0; t < y.size(); ++t) {
    double v = eps(rng);
    for (std::size_t k = 0; k < phi.size() && k < t; ++k) v += phi[k] * y[t - 1 - k];
    y[t] = v;
  }
  return {y.begin() + std::ptrdiff_t(burn_in), y.end()};
}

// AIC order choice with every order fitted independently by a direct solve.
inline int aic_order(const std::vector<double>& y, int p_max) {
  const auto acov = qkad::autocovariance(y, std::size_t(p_max)).values;
  const double n = double(y.size());
  int best_p = 0;
  double best = INFINITY;
  for (int p = 1; p <= p_max; ++p) {
    const auto phi = qkad::yule_walker_direct(acov, p);
    double s2 = acov[0];
    for (int k = 0; k < p; ++k) s2 -= phi[std::size_t(k)] * acov[std::size_t(k + 1)];
    const double aic = n * std::log(s2) + 2.0 * p;
    if (aic < best) {
      best = aic;
      best_p = p;
    }
  }
  return best_p;
}

// Biased autocovariance of a random series: always a valid (PSD) sequence.
inline std::vector<double> random_acov(std::mt19937_64& rng, int p) {
  std::uniform_int_distribution<int> len(4 * p + 8, 400);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> coef(-0.9, 0.9);
  std::vector<double> y(std::size_t(len(rng)));
  const double a = coef(rng);
  double prev = 0.0;
  for (auto& v : y) prev = v = a * prev + g(rng);
  return qkad::autocovariance(y, std::size_t(p)).values;
}

inline std::vector<std::vector<double>> gaussian_cluster(std::mt19937_64& rng, std::size_t n,
                                                         std::size_t d, double sd = 1.0) {
  std::normal_distribution<double> g(0.0, sd);
  std::vector<std::vector<double>> out(n, std::vector<double>(d));
  for (auto& row : out) {
    for (auto& v : row) v = g(rng);
  }
  return out;
}

inline Eigen::MatrixXd rbf_gram(const std::vector<std::vector<double>>& xs, double gamma) {
  const auto n = Eigen::Index(xs.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      double d2 = 0.0;
      for (std::size_t t = 0; t < xs[0].size(); ++t) {
        const double d = xs[std::size_t(i)][t] - xs[std::size_t(j)][t];
        d2 += d * d;
      }
      k(i, j) = std::exp(-gamma * d2);
    }
  }
  return k;
}

}  // namespace oracle
