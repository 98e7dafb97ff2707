#include <catch_amalgamated.hpp>

#include <numbers>
#include <random>

#include "oracles.hpp"
#include "qkad/quantumsim.hpp"

using namespace qkad;
using Catch::Matchers::WithinAbs;

namespace {

std::vector<double> random_x(std::mt19937_64& rng, int n, double lo = -2.0, double hi = 2.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> x(static_cast<std::size_t>(n));
  for (auto& v : x) v = u(rng);
  return x;
}

}  // namespace

TEST_CASE("ry on zero gives the equal superposition") {
  const auto s = apply_ry(zero_state(1), 0, std::numbers::pi / 2);
  CHECK_THAT(s[0].real(), WithinAbs(1 / std::sqrt(2.0), 1e-15));
  CHECK_THAT(s[1].real(), WithinAbs(1 / std::sqrt(2.0), 1e-15));
}

TEST_CASE("bell state under the declared bit order") {
  FeatureMapConfig cfg{2, 1, Entangler::linear_chain, std::numbers::pi};
  const auto s = feature_map_state(std::vector<double>{0.5, 0.0}, cfg);
  const double h = 1 / std::sqrt(2.0);
  CHECK_THAT(std::abs(s[0] - h), WithinAbs(0.0, 1e-15));
  CHECK_THAT(std::abs(s[1]), WithinAbs(0.0, 1e-15));
  CHECK_THAT(std::abs(s[2]), WithinAbs(0.0, 1e-15));
  CHECK_THAT(std::abs(s[3] - h), WithinAbs(0.0, 1e-15));
}

TEST_CASE("five inputs span 32 amplitudes") {
  const auto s = feature_map_state(std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5}, {});
  CHECK(s.dim() == 32);
  CHECK(s.n_qubits() == 5);
  CHECK_THAT(s.norm_squared(), WithinAbs(1.0, 1e-12));
}

TEST_CASE("statevector matches the dense unitary product") {
  std::mt19937_64 rng(99);
  for (int n = 1; n <= 3; ++n) {
    for (auto ent : {Entangler::linear_chain, Entangler::ring}) {
      for (int reps : {1, 2, 3}) {
        FeatureMapConfig cfg{n, reps, ent, std::numbers::pi};
        for (int t = 0; t < 20; ++t) {
          const auto x = random_x(rng, n);
          const auto s = feature_map_state(x, cfg);
          const auto ref = oracle::feature_map(x, cfg);
          for (std::size_t k = 0; k < s.dim(); ++k) {
            REQUIRE(std::abs(s[k] - ref(Eigen::Index(k))) < 1e-10);
          }
        }
      }
    }
  }
}

TEST_CASE("single gates match their embedded matrices") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  const int n = 3;
  Eigen::VectorXcd v(8);
  for (int k = 0; k < 8; ++k) v(k) = {g(rng), g(rng)};
  for (int q = 0; q < n; ++q) {
    std::vector<Amplitude> a(v.data(), v.data() + 8);
    gates::ry(a, q, 0.7);
    const Eigen::VectorXcd ref = oracle::embed(oracle::ry_matrix(0.7), q, n) * v;
    for (int k = 0; k < 8; ++k) REQUIRE(std::abs(a[std::size_t(k)] - ref(k)) < 1e-12);
    for (int t = 0; t < n; ++t) {
      if (t == q) continue;
      std::vector<Amplitude> b(v.data(), v.data() + 8);
      gates::cnot(b, q, t);
      const Eigen::VectorXcd rc = oracle::cnot_matrix(q, t, n) * v;
      for (int k = 0; k < 8; ++k) REQUIRE(std::abs(b[std::size_t(k)] - rc(k)) < 1e-15);
    }
  }
}

TEST_CASE("gates preserve the norm") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ang(-10, 10);
  auto s = zero_state(5);
  for (int step = 0; step < 500; ++step) {
    const int q = int(rng() % 5);
    if (step % 2) {
      s = apply_ry(std::move(s), q, ang(rng));
    } else {
      s = apply_cnot(std::move(s), q, int((q + 1 + rng() % 4) % 5));
    }
    REQUIRE(std::abs(s.norm_squared() - 1.0) < 1e-12);
  }
}

TEST_CASE("gates are linear on raw arrays") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  std::vector<Amplitude> a(16);
  for (auto& v : a) v = {g(rng), g(rng)};
  const Amplitude lambda{1.7, -0.4};
  for (int q = 0; q < 4; ++q) {
    auto x = a;
    auto y = a;
    for (auto& v : y) v *= lambda;
    gates::ry(x, q, 1.1);
    gates::ry(y, q, 1.1);
    gates::cnot(x, q, (q + 1) % 4);
    gates::cnot(y, q, (q + 1) % 4);
    for (std::size_t k = 0; k < x.size(); ++k) REQUIRE(std::abs(lambda * x[k] - y[k]) < 1e-12);
  }
}

TEST_CASE("fidelity examples and symmetry") {
  FeatureMapConfig one{1, 1, Entangler::linear_chain, std::numbers::pi};
  const auto a = feature_map_state(std::vector<double>{0.0}, one);
  const auto b = feature_map_state(std::vector<double>{0.5}, one);
  CHECK_THAT(fidelity(a, b), WithinAbs(0.5, 1e-15));

  std::mt19937_64 rng(12);
  for (int t = 0; t < 200; ++t) {
    const auto x = feature_map_state(random_x(rng, 5), {});
    const auto y = feature_map_state(random_x(rng, 5), {});
    REQUIRE(fidelity(x, y) == fidelity(y, x));
    REQUIRE(fidelity(x, y) >= 0.0);
    REQUIRE(fidelity(x, y) <= 1.0 + 1e-12);
    REQUIRE(std::abs(fidelity(x, x) - 1.0) < 1e-12);
  }
}

TEST_CASE("invalid inputs are rejected") {
  CHECK_THROWS_AS(feature_map_state(std::vector<double>{0.1, 0.2}, {}), Error);
  CHECK_THROWS_AS(feature_map_state(std::vector<double>{0.1, NAN, 0, 0, 0}, {}), Error);
  CHECK_THROWS_AS(apply_ry(zero_state(2), 2, 0.1), Error);
  CHECK_THROWS_AS(apply_cnot(zero_state(2), 1, 1), Error);
  CHECK_THROWS_AS(QuantumState(std::vector<Amplitude>{1.0, 1.0}), Error);
  CHECK_THROWS_AS(QuantumState(std::vector<Amplitude>{1.0, 0.0, 0.0}), Error);
  CHECK_THROWS_AS(fidelity(zero_state(2), zero_state(3)), Error);
}
