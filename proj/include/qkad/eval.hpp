#pragma once

// Detection metrics, paired comparison statistics, the incremental feature
// sweep, and phi_3/phi_4 quadrant diagnosis.

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "qkad/armodel.hpp"
#include "qkad/error.hpp"
#include "qkad/kernels.hpp"
#include "qkad/ocsvm.hpp"
#include "qkad/signal.hpp"

namespace qkad {

/// Six significant digits, the precision used for every emitted report value.
inline std::string format_g6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline double round_g6(double v) { return std::isfinite(v) ? std::stod(format_g6(v)) : v; }

// ---------------------------------------------------------------------------
// Confusion matrix and metrics
// ---------------------------------------------------------------------------

enum class PositiveClass { normal, anomaly };

inline constexpr std::string_view to_string(PositiveClass p) noexcept {
  return p == PositiveClass::normal ? "normal" : "anomaly";
}

struct ConfusionMatrix {
  long tp = 0;
  long fn = 0;
  long fp = 0;
  long tn = 0;
  PositiveClass positive_class = PositiveClass::anomaly;

  long total() const noexcept { return tp + fn + fp + tn; }

  ConfusionMatrix& operator+=(const ConfusionMatrix& o) {
    detail::require(positive_class == o.positive_class, Errc::invalid_argument,
                    "mixed positive-class conventions");
    tp += o.tp;
    fn += o.fn;
    fp += o.fp;
    tn += o.tn;
    return *this;
  }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Labels and predictions use 0 = normal, 1 = anomaly.
inline ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> labels,
                                 PositiveClass positive) {
  detail::require(preds.size() == labels.size(), Errc::dimension_mismatch,
                  "predictions vs labels");
  detail::require(!preds.empty(), Errc::invalid_argument, "empty prediction set");
  const int pos = positive == PositiveClass::anomaly ? kAnomaly : kNormal;
  ConfusionMatrix cm;
  cm.positive_class = positive;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool predicted_pos = preds[i] == pos;
    const bool actual_pos = labels[i] == pos;
    if (actual_pos) {
      (predicted_pos ? cm.tp : cm.fn)++;
    } else {
      (predicted_pos ? cm.fp : cm.tn)++;
    }
  }
  return cm;
}

/// Swaps the roles of the two classes.
inline ConfusionMatrix flip_positive(const ConfusionMatrix& cm) {
  return {cm.tn, cm.fp, cm.fn, cm.tp,
          cm.positive_class == PositiveClass::anomaly ? PositiveClass::normal
                                                      : PositiveClass::anomaly};
}

/// CON/CHA operating condition, e.g. "0/1".
inline std::string condition_name(const SceneLabel& l) {
  return std::to_string(l.con_state) + "/" + std::to_string(l.cha_state);
}

inline const std::array<SceneLabel, 4>& all_conditions() {
  static const std::array<SceneLabel, 4> conds{
      SceneLabel{0, 0}, SceneLabel{0, 1}, SceneLabel{1, 0}, SceneLabel{1, 1}};
  return conds;
}

struct MetricsReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  PositiveClass positive_class = PositiveClass::anomaly;
  std::map<std::string, ConfusionMatrix> per_condition;
};

/// Degenerate ratios (0/0) are reported as 0.
inline MetricsReport metrics(const ConfusionMatrix& cm) {
  detail::require(cm.total() > 0, Errc::invalid_argument, "empty confusion matrix");
  auto ratio = [](double num, double den) { return den > 0.0 ? num / den : 0.0; };
  MetricsReport r;
  r.positive_class = cm.positive_class;
  r.accuracy = double(cm.tp + cm.tn) / double(cm.total());
  r.precision = ratio(double(cm.tp), double(cm.tp + cm.fp));
  r.recall = ratio(double(cm.tp), double(cm.tp + cm.fn));
  r.f1 = ratio(2.0 * r.precision * r.recall, r.precision + r.recall);
  return r;
}

/// Overall metrics plus a confusion matrix per operating condition.
inline MetricsReport metrics_by_condition(std::span<const int> preds,
                                          std::span<const SceneLabel> conditions,
                                          PositiveClass positive) {
  detail::require(preds.size() == conditions.size(), Errc::dimension_mismatch,
                  "predictions vs conditions");
  std::vector<int> labels(conditions.size());
  for (std::size_t i = 0; i < conditions.size(); ++i) {
    labels[i] = conditions[i].is_normal() ? kNormal : kAnomaly;
  }
  MetricsReport r = metrics(confusion(preds, labels, positive));
  for (const auto& cond : all_conditions()) {
    std::vector<int> p;
    std::vector<int> l;
    for (std::size_t i = 0; i < conditions.size(); ++i) {
      if (conditions[i] == cond) {
        p.push_back(preds[i]);
        l.push_back(labels[i]);
      }
    }
    if (!p.empty()) r.per_condition[condition_name(cond)] = confusion(p, l, positive);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

namespace detail {

// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace detail

/// Regularised incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  detail::require(a > 0.0 && b > 0.0, Errc::invalid_argument, "beta parameters");
  detail::require(x >= 0.0 && x <= 1.0, Errc::invalid_argument, "x outside [0, 1]");
  if (x == 0.0 || x == 1.0) return x;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

/// Two-sided p-value of Student's t with `df` degrees of freedom.
inline double student_t_two_sided_p(double t, double df) {
  detail::require(df > 0.0, Errc::invalid_argument, "df must be positive");
  if (!std::isfinite(t)) return 0.0;
  return incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

struct TTestResult {
  double t = 0.0;
  int df = 0;
  double p = 1.0;
};

namespace detail {
inline double mean(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / double(x.size());
}
inline double sample_variance(std::span<const double> x) {
  const double m = mean(x);
  double acc = 0.0;
  for (double v : x) acc += (v - m) * (v - m);
  return acc / double(x.size() - 1);
}
}  // namespace detail

inline TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  detail::require(a.size() == b.size(), Errc::dimension_mismatch, "paired samples");
  detail::require(a.size() >= 2, Errc::too_few_samples, "need n >= 2");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const double sd = std::sqrt(detail::sample_variance(d));
  detail::require(sd > 0.0, Errc::degenerate_series, "zero-variance differences");
  TTestResult r;
  r.t = detail::mean(d) / (sd / std::sqrt(double(d.size())));
  r.df = int(d.size()) - 1;
  r.p = student_t_two_sided_p(r.t, r.df);
  return r;
}

/// (mean(a) - mean(b)) / sqrt((s_a^2 + s_b^2) / 2) with sample variances.
inline double cohens_d(std::span<const double> a, std::span<const double> b) {
  detail::require(a.size() >= 2 && b.size() >= 2, Errc::too_few_samples, "need n >= 2");
  const double pooled =
      std::sqrt((detail::sample_variance(a) + detail::sample_variance(b)) / 2.0);
  const double diff = detail::mean(a) - detail::mean(b);
  if (diff == 0.0) return 0.0;
  detail::require(pooled > 0.0, Errc::degenerate_series, "zero pooled standard deviation");
  return diff / pooled;
}

/// Same statistic from reported means and standard deviations.
inline double cohens_d(double mean_a, double sd_a, double mean_b, double sd_b) {
  const double pooled = std::sqrt((sd_a * sd_a + sd_b * sd_b) / 2.0);
  detail::require(pooled > 0.0, Errc::degenerate_series, "zero pooled standard deviation");
  return (mean_a - mean_b) / pooled;
}

// ---------------------------------------------------------------------------
// Incremental feature sweep
// ---------------------------------------------------------------------------

struct SweepRow {
  int k = 0;
  double accuracy = 0.0;
  double f1 = 0.0;
};

inline std::vector<FeatureVector> feature_prefix(std::span<const FeatureVector> xs, std::size_t k) {
  std::vector<FeatureVector> out;
  out.reserve(xs.size());
  for (const auto& fv : xs) {
    detail::require(fv.dim() >= k, Errc::dimension_mismatch, "feature prefix");
    out.push_back({{fv.values.begin(), fv.values.begin() + std::ptrdiff_t(k)}, fv.source_label});
  }
  return out;
}

/// Retrains on the first k coefficients for k = 1..d (the quantum map uses k
/// qubits) and scores the test set with anomaly as the positive class.
inline std::vector<SweepRow> feature_sweep(std::span<const FeatureVector> train_set,
                                           std::span<const FeatureVector> test_set,
                                           std::span<const int> labels,
                                           const KernelConfig& kernel, const OcSvmConfig& cfg) {
  detail::require(!train_set.empty() && !test_set.empty(), Errc::too_few_samples, "sweep sets");
  const std::size_t d = train_set.front().dim();
  detail::require(d >= 1, Errc::invalid_argument, "feature dimension");
  std::vector<SweepRow> rows;
  for (std::size_t k = 1; k <= d; ++k) {
    KernelConfig kc = kernel;
    if (auto* q = std::get_if<QuantumParams>(&kc.params)) q->feature_map.n_qubits = int(k);
    const auto det = fit_detector(feature_prefix(train_set, k), kc, cfg);
    const auto preds = det.predict(feature_prefix(test_set, k));
    const auto rep = metrics(confusion(preds, labels, PositiveClass::anomaly));
    rows.push_back({int(k), rep.accuracy, rep.f1});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Quadrant diagnosis
// ---------------------------------------------------------------------------

enum class Quadrant { I, II, III, IV, origin };

inline constexpr std::string_view to_string(Quadrant q) noexcept {
  switch (q) {
    case Quadrant::I: return "I";
    case Quadrant::II: return "II";
    case Quadrant::III: return "III";
    case Quadrant::IV: return "IV";
    case Quadrant::origin: return "origin";
  }
  return "origin";
}

inline Quadrant parse_quadrant(std::string_view s) {
  for (auto q : {Quadrant::I, Quadrant::II, Quadrant::III, Quadrant::IV, Quadrant::origin}) {
    if (to_string(q) == s) return q;
  }
  throw Error(Errc::invalid_argument, "quadrant '" + std::string(s) + "'");
}

struct QuadrantDiagnosis {
  Quadrant quadrant = Quadrant::origin;
  std::optional<MachineId> implicated;  // II -> CON, IV -> CHA, otherwise none
};

inline QuadrantDiagnosis quadrant_of(double x3, double x4) {
  constexpr double kAxis = 1e-9;
  if (std::abs(x3) < kAxis || std::abs(x4) < kAxis) return {Quadrant::origin, std::nullopt};
  if (x3 > 0 && x4 > 0) return {Quadrant::I, std::nullopt};
  if (x3 < 0 && x4 > 0) return {Quadrant::II, MachineId::CON};
  if (x3 < 0 && x4 < 0) return {Quadrant::III, std::nullopt};
  return {Quadrant::IV, MachineId::CHA};
}

/// Reads the (phi_3, phi_4) plane of an already standardised feature vector.
inline QuadrantDiagnosis quadrant_classify(std::span<const double> x) {
  detail::require(x.size() >= 4, Errc::dimension_mismatch, "quadrant diagnosis needs d >= 4");
  return quadrant_of(x[2], x[3]);
}

inline QuadrantDiagnosis quadrant_classify(const FeatureVector& fv) {
  return quadrant_classify(fv.values);
}

struct ScatterPoint {
  double x3 = 0.0;
  double x4 = 0.0;
  SceneLabel condition{};
  int predicted = kNormal;
};

inline constexpr std::string_view kScatterHeader = "x3,x4,con_state,cha_state,predicted,quadrant";

/// Plot-ready CSV of the anomaly-flagged points only.
inline std::string scatter_csv(std::span<const ScatterPoint> points) {
  std::string out(kScatterHeader);
  out += '\n';
  for (const auto& p : points) {
    if (p.predicted != kAnomaly) continue;
    out += format_g6(p.x3) + ',' + format_g6(p.x4) + ',' + std::to_string(p.condition.con_state) +
           ',' + std::to_string(p.condition.cha_state) + ',' + std::to_string(p.predicted) + ',' +
           std::string(to_string(quadrant_of(p.x3, p.x4).quadrant)) + '\n';
  }
  return out;
}

inline void scatter_export(std::span<const ScatterPoint> points,
                           const std::filesystem::path& path) {
  std::ofstream out(path);
  out << scatter_csv(points);
  if (!out) throw Error(Errc::io_failure, path.string());
}

struct ScatterRow {
  ScatterPoint point;
  Quadrant quadrant = Quadrant::origin;
};

inline std::vector<ScatterRow> read_scatter(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::missing_file, path.string());
  std::string line;
  std::getline(in, line);
  detail::require(line == kScatterHeader, Errc::malformed_file, "scatter header");
  std::vector<ScatterRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    detail::require(cells.size() == 6, Errc::malformed_file, "scatter row: " + line);
    ScatterRow r;
    r.point = {std::stod(cells[0]), std::stod(cells[1]),
               SceneLabel{std::stoi(cells[2]), std::stoi(cells[3])}, std::stoi(cells[4])};
    r.quadrant = parse_quadrant(cells[5]);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace qkad
