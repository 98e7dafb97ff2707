#pragma once

// JSON mappings for configs and trained detectors.

#include <cstdint>
#include <string>

#include <json.hpp>

#include "qkad/kernels.hpp"
#include "qkad/ocsvm.hpp"
#include "qkad/quantumsim.hpp"
#include "qkad/signal.hpp"

namespace qkad {

using nlohmann::json;

inline void to_json(json& j, const FeatureMapConfig& c) {
  j = json{{"n_qubits", c.n_qubits},
           {"repetitions", c.repetitions},
           {"entangler", to_string(c.entangler)},
           {"angle_scale", c.angle_scale}};
}

inline void from_json(const json& j, FeatureMapConfig& c) {
  c.n_qubits = j.value("n_qubits", c.n_qubits);
  c.repetitions = j.value("repetitions", c.repetitions);
  const auto ent = j.value("entangler", std::string(to_string(c.entangler)));
  if (ent == "ring") {
    c.entangler = Entangler::ring;
  } else if (ent == "linear_chain") {
    c.entangler = Entangler::linear_chain;
  } else {
    throw Error(Errc::invalid_argument, "entangler '" + ent + "'");
  }
  c.angle_scale = j.value("angle_scale", c.angle_scale);
}

inline void to_json(json& j, const KernelConfig& k) {
  if (const auto* r = std::get_if<RbfParams>(&k.params)) {
    j = json{{"kind", "rbf"}, {"gamma", r->gamma}, {"standardize", k.standardize}};
  } else {
    const auto& q = std::get<QuantumParams>(k.params);
    j = json{{"kind", "quantum"},
             {"feature_map", q.feature_map},
             {"encoding_range", q.encoding_range},
             {"standardize", k.standardize}};
  }
}

inline void from_json(const json& j, KernelConfig& k) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "rbf") {
    k = KernelConfig::rbf(j.value("gamma", RbfParams{}.gamma));
    k.standardize = j.value("standardize", true);
  } else if (kind == "quantum") {
    QuantumParams q;
    q.encoding_range = 0.0;
    if (j.contains("feature_map")) q.feature_map = j.at("feature_map").get<FeatureMapConfig>();
    q.encoding_range = j.value("encoding_range", q.encoding_range);
    k.params = q;
    k.standardize = j.value("standardize", false);
  } else {
    throw Error(Errc::invalid_argument, "kernel kind '" + kind + "'");
  }
  k.validate();
}

inline void to_json(json& j, const OcSvmConfig& c) {
  j = json{{"nu", c.nu}, {"tol", c.tol}, {"max_iter", c.max_iter}};
}

inline void from_json(const json& j, OcSvmConfig& c) {
  c.nu = j.value("nu", c.nu);
  c.tol = j.value("tol", c.tol);
  c.max_iter = j.value("max_iter", c.max_iter);
  c.validate();
}

inline void to_json(json& j, const Standardizer& s) {
  std::vector<int> degenerate(s.degenerate.begin(), s.degenerate.end());
  j = json{{"means", s.means}, {"stds", s.stds}, {"degenerate", degenerate}};
}

inline void from_json(const json& j, Standardizer& s) {
  s.means = j.at("means").get<std::vector<double>>();
  s.stds = j.at("stds").get<std::vector<double>>();
  const auto deg = j.value("degenerate", std::vector<int>(s.means.size(), 0));
  s.degenerate.assign(deg.begin(), deg.end());
  detail::require(s.stds.size() == s.means.size() && s.degenerate.size() == s.means.size(),
                  Errc::malformed_file, "standardizer lengths");
}

inline void to_json(json& j, const MachineSpec& m) {
  j = json{{"machine_id", to_string(m.machine_id)}, {"base_freq_hz", m.base_freq_hz},
           {"harmonic_gains", m.harmonic_gains},    {"base_spl_db", m.base_spl_db},
           {"click_ring_hz", m.click_ring_hz},      {"click_gain_db", m.click_gain_db},
           {"click_broadband", m.click_broadband}};
}

inline void from_json(const json& j, MachineSpec& m) {
  if (j.contains("machine_id")) {
    m.machine_id = j.at("machine_id").get<std::string>() == "CHA" ? MachineId::CHA : MachineId::CON;
  }
  m.base_freq_hz = j.value("base_freq_hz", m.base_freq_hz);
  m.harmonic_gains = j.value("harmonic_gains", m.harmonic_gains);
  m.base_spl_db = j.value("base_spl_db", m.base_spl_db);
  m.click_ring_hz = j.value("click_ring_hz", m.click_ring_hz);
  m.click_gain_db = j.value("click_gain_db", m.click_gain_db);
  m.click_broadband = j.value("click_broadband", m.click_broadband);
  m.validate();
}

/// Trained detector with everything needed to score new feature vectors.
inline json detector_to_json(const Detector& d) {
  const auto& m = d.model;
  json training = json::array();
  for (const auto& fv : d.training) training.push_back(fv.values);
  return json{{"alphas", m.alphas},
              {"rho", m.rho},
              {"support_indices", m.support_indices},
              {"nu", m.config.nu},
              {"ocsvm", m.config},
              {"kernel", m.kernel_config},
              {"standardizer", m.standardizer},
              {"training_features", training},
              {"solver", {{"iterations", m.iterations},
                          {"converged", m.converged},
                          {"kkt_violation", m.kkt_violation},
                          {"rho_from_bounds", m.rho_from_bounds}}}};
}

inline Detector detector_from_json(const json& j) {
  Detector d;
  auto& m = d.model;
  m.alphas = j.at("alphas").get<std::vector<double>>();
  m.rho = j.at("rho").get<double>();
  m.support_indices = j.at("support_indices").get<std::vector<std::size_t>>();
  m.config = j.at("ocsvm").get<OcSvmConfig>();
  m.kernel_config = j.at("kernel").get<KernelConfig>();
  m.standardizer = j.at("standardizer").get<Standardizer>();
  for (const auto& row : j.at("training_features")) {
    d.training.push_back(FeatureVector{row.get<std::vector<double>>(), std::nullopt});
  }
  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    m.iterations = s.value("iterations", 0L);
    m.converged = s.value("converged", true);
    m.kkt_violation = s.value("kkt_violation", 0.0);
    m.rho_from_bounds = s.value("rho_from_bounds", false);
  }
  detail::require(d.training.size() == m.alphas.size(), Errc::malformed_file,
                  "training rows vs alphas");
  return d;
}

/// 64-bit FNV-1a, used to tie models to the features and config they came from.
inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace qkad
