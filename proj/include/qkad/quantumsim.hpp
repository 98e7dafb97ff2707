#pragma once

// Dense statevector simulation of the Ry-encoding feature-map circuit.
//
// Bit convention: qubit i is bit i of the basis index (qubit 0 is the least
// significant bit), so for two qubits amplitude k corresponds to |q1 q0>.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string_view>
#include <vector>

#include "qkad/error.hpp"

namespace qkad {

using Amplitude = std::complex<double>;

enum class Entangler { linear_chain, ring };

inline constexpr std::string_view to_string(Entangler e) noexcept {
  return e == Entangler::ring ? "ring" : "linear_chain";
}

struct FeatureMapConfig {
  int n_qubits = 5;
  int repetitions = 2;
  Entangler entangler = Entangler::linear_chain;
  double angle_scale = std::numbers::pi;

  void validate() const {
    detail::require(n_qubits >= 1 && n_qubits <= 20, Errc::invalid_argument, "n_qubits");
    detail::require(repetitions >= 1, Errc::invalid_argument, "repetitions must be >= 1");
  }
  friend bool operator==(const FeatureMapConfig&, const FeatureMapConfig&) = default;
};

// Raw in-place gate kernels. They do not require unit norm.
namespace gates {

inline void check_qubit(std::size_t dim, int qubit) {
  detail::require(qubit >= 0 && (std::size_t{1} << qubit) < dim, Errc::out_of_range,
                  "qubit " + std::to_string(qubit));
}

inline void ry(std::span<Amplitude> amps, int qubit, double theta) {
  check_qubit(amps.size(), qubit);
  const double c = std::cos(theta / 2.0);
  const double s = std::sin(theta / 2.0);
  const std::size_t mask = std::size_t{1} << qubit;
  for (std::size_t k = 0; k < amps.size(); ++k) {
    if (k & mask) continue;
    const Amplitude a0 = amps[k];
    const Amplitude a1 = amps[k | mask];
    amps[k] = c * a0 - s * a1;
    amps[k | mask] = s * a0 + c * a1;
  }
}

inline void cnot(std::span<Amplitude> amps, int control, int target) {
  check_qubit(amps.size(), control);
  check_qubit(amps.size(), target);
  detail::require(control != target, Errc::invalid_argument, "control == target");
  const std::size_t cmask = std::size_t{1} << control;
  const std::size_t tmask = std::size_t{1} << target;
  for (std::size_t k = 0; k < amps.size(); ++k) {
    if ((k & cmask) && !(k & tmask)) std::swap(amps[k], amps[k | tmask]);
  }
}

}  // namespace gates

class QuantumState {
 public:
  /// Validates power-of-two length and unit norm (1e-10).
  explicit QuantumState(std::vector<Amplitude> amplitudes) : amps_(std::move(amplitudes)) {
    const std::size_t n = amps_.size();
    detail::require(n >= 2 && (n & (n - 1)) == 0, Errc::invalid_argument,
                    "amplitude count must be a power of two");
    detail::require(std::abs(norm_squared() - 1.0) < 1e-10, Errc::invalid_argument,
                    "state is not normalised");
    while ((std::size_t{1} << n_qubits_) < n) ++n_qubits_;
  }

  int n_qubits() const noexcept { return n_qubits_; }
  std::size_t dim() const noexcept { return amps_.size(); }
  std::span<const Amplitude> amplitudes() const noexcept { return amps_; }
  const Amplitude& operator[](std::size_t k) const { return amps_[k]; }

  double norm_squared() const noexcept {
    double acc = 0.0;
    for (const auto& a : amps_) acc += std::norm(a);
    return acc;
  }

 private:
  friend QuantumState apply_ry(QuantumState, int, double);
  friend QuantumState apply_cnot(QuantumState, int, int);
  friend QuantumState feature_map_state(std::span<const double>, const FeatureMapConfig&);

  QuantumState(std::vector<Amplitude> amplitudes, int n_qubits)
      : amps_(std::move(amplitudes)), n_qubits_(n_qubits) {}

  std::vector<Amplitude> amps_;
  int n_qubits_ = 0;
};

inline QuantumState zero_state(int n_qubits) {
  detail::require(n_qubits >= 1 && n_qubits <= 20, Errc::invalid_argument, "n_qubits");
  std::vector<Amplitude> amps(std::size_t{1} << n_qubits);
  amps[0] = 1.0;
  return QuantumState(std::move(amps));
}

inline QuantumState apply_ry(QuantumState state, int qubit, double theta) {
  gates::ry(state.amps_, qubit, theta);
  return state;
}

inline QuantumState apply_cnot(QuantumState state, int control, int target) {
  gates::cnot(state.amps_, control, target);
  return state;
}

/// Repeats {Ry(angle_scale * x_i) on qubit i, then the CNOT entangler}
/// `repetitions` times starting from |0...0>.
inline QuantumState feature_map_state(std::span<const double> x, const FeatureMapConfig& cfg) {
  cfg.validate();
  detail::require(x.size() == std::size_t(cfg.n_qubits), Errc::dimension_mismatch,
                  "feature length " + std::to_string(x.size()) + " vs " +
                      std::to_string(cfg.n_qubits) + " qubits");
  for (double v : x) detail::require(std::isfinite(v), Errc::non_finite, "feature value");

  std::vector<Amplitude> amps(std::size_t{1} << cfg.n_qubits);
  amps[0] = 1.0;
  const int n = cfg.n_qubits;
  for (int rep = 0; rep < cfg.repetitions; ++rep) {
    for (int q = 0; q < n; ++q) gates::ry(amps, q, cfg.angle_scale * x[std::size_t(q)]);
    for (int q = 0; q + 1 < n; ++q) gates::cnot(amps, q, q + 1);
    if (cfg.entangler == Entangler::ring && n > 2) gates::cnot(amps, n - 1, 0);
  }
  return QuantumState(std::move(amps), n);
}

/// |<b|a>|^2
inline double fidelity(const QuantumState& a, const QuantumState& b) {
  detail::require(a.dim() == b.dim(), Errc::dimension_mismatch, "state dimensions differ");
  Amplitude overlap = 0.0;
  auto x = a.amplitudes();
  auto y = b.amplitudes();
  for (std::size_t k = 0; k < x.size(); ++k) overlap += std::conj(y[k]) * x[k];
  return std::norm(overlap);
}

}  // namespace qkad
