#pragma once

// One-class cross-validation of the RBF width.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "qkad/kernels.hpp"
#include "qkad/ocsvm.hpp"

namespace qkad {

inline const std::vector<double>& default_gamma_grid() {
  static const std::vector<double> grid{0.01, 0.1, 0.5, 1.0, 2.0, 10.0};
  return grid;
}

struct GammaScore {
  double gamma = 0.0;
  double acceptance = 0.0;   // mean held-out fraction labelled normal
  double sv_fraction = 0.0;  // mean support-vector fraction of the fold models
  bool feasible = false;     // sv_fraction <= 2 nu
};

struct GammaSelection {
  double gamma = 0.0;
  std::vector<GammaScore> scores;
};

/// k-fold CV on normal-only data: pick the gamma with the highest held-out
/// acceptance among those whose SV fraction stays <= 2 nu; ties go to the
/// smaller gamma. If no gamma is feasible the SV constraint is dropped.
inline GammaSelection select_gamma(std::span<const FeatureVector> train_set,
                                   std::span<const double> grid, const OcSvmConfig& cfg = {},
                                   int folds = 5, std::uint64_t seed = 0) {
  detail::require(!grid.empty(), Errc::invalid_argument, "empty gamma grid");
  detail::require(train_set.size() >= 10, Errc::too_few_samples, "gamma CV needs >= 10 samples");
  detail::require(folds >= 2 && std::size_t(folds) <= train_set.size(), Errc::invalid_argument,
                  "fold count");

  std::vector<double> sorted(grid.begin(), grid.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.size() == 1) return {sorted[0], {{sorted[0], 1.0, 0.0, true}}};

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  GammaSelection out;
  for (double gamma : sorted) {
    GammaScore score{gamma, 0.0, 0.0, false};
    for (int f = 0; f < folds; ++f) {
      std::vector<FeatureVector> fit_part;
      std::vector<FeatureVector> held_out;
      for (std::size_t r = 0; r < order.size(); ++r) {
        (int(r % std::size_t(folds)) == f ? held_out : fit_part).push_back(train_set[order[r]]);
      }
      const auto det = fit_detector(std::move(fit_part), KernelConfig::rbf(gamma), cfg);
      const auto preds = det.predict(held_out);
      const auto accepted = std::count(preds.begin(), preds.end(), kNormal);
      score.acceptance += double(accepted) / double(held_out.size());
      score.sv_fraction +=
          double(det.model.support_indices.size()) / double(det.model.n_train());
    }
    score.acceptance /= folds;
    score.sv_fraction /= folds;
    score.feasible = score.sv_fraction <= 2.0 * cfg.nu;
    out.scores.push_back(score);
  }

  const bool any_feasible =
      std::any_of(out.scores.begin(), out.scores.end(), [](const auto& s) { return s.feasible; });
  const GammaScore* best = nullptr;
  for (const auto& s : out.scores) {
    if (any_feasible && !s.feasible) continue;
    if (!best || s.acceptance > best->acceptance) best = &s;
  }
  out.gamma = best->gamma;
  return out;
}

}  // namespace qkad
