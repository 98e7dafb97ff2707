// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "qkad/pipeline.hpp"

using namespace qkad;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void run(int id, const char* name, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (dt > budget_s) {
    o.pass = false;
    o.detail += "; over time budget";
  }
  if (!o.pass) ++failures;
  std::printf("%s %2d %-34s %s [%.2fs / %.0fs]\n", o.pass ? "PASS" : "FAIL", id, name,
              o.detail.c_str(), dt, budget_s);
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome dataset_composition() {
  const auto dir = fs::temp_directory_path() / "qkad_acceptance_synth";
  fs::remove_all(dir);
  ExperimentConfig cfg;
  cmd_synth(cfg, dir);
  const auto manifest = detail::read_json(dir / "manifest.json");
  std::map<std::string, std::map<std::string, int>> per_cell;
  std::map<std::string, int> train;
  for (const auto& e : manifest.at("samples")) {
    const std::string cell = format_g6(e.at("distance_m").get<double>()) + "/" +
                             e.at("channel").get<std::string>();
    per_cell[cell][std::to_string(e.at("con_state").get<int>()) +
                   std::to_string(e.at("cha_state").get<int>())]++;
    if (e.at("split") == "train") {
      train[cell] += e.at("con_state") == 0 && e.at("cha_state") == 0 ? 1 : 1000;
    }
  }
  fs::remove_all(dir);
  const std::map<std::string, int> expected{{"00", 60}, {"01", 30}, {"10", 30}, {"11", 30}};
  bool ok = per_cell.size() == 12;
  for (const auto& [cell, counts] : per_cell) ok = ok && counts == expected && train[cell] == 40;
  return {ok, fmt("%zu cells, 60/30/30/30 per cell, 40 training normals per cell", per_cell.size())};
}

Outcome metric_derivation() {
  const ConfusionMatrix normal_pos{20, 0, 30, 60, PositiveClass::normal};
  const auto n = metrics(normal_pos);
  const auto a = metrics(flip_positive(normal_pos));
  const bool ok = std::abs(n.accuracy - 0.72727) <= 1e-5 && std::abs(a.accuracy - 0.72727) <= 1e-5 &&
                  std::abs(a.f1 - 0.8) <= 1e-5 && std::abs(n.f1 - 0.57143) <= 1e-5;
  return {ok, fmt("accuracy %.5f, F1 anomaly-positive %.5f, F1 normal-positive %.5f", n.accuracy,
                  a.f1, n.f1)};
}

Outcome kernel_identities() {
  std::mt19937_64 rng(1);
  std::vector<FeatureVector> raw;
  for (auto& row : oracle::gaussian_cluster(rng, 1000, 5, 0.4)) raw.push_back({row, std::nullopt});
  const auto s = fit_standardizer(raw);
  double diag = 0, asym = 0, lo = 1, hi = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto x = s.transform(raw[i].values);
    const auto y = s.transform(raw[(i + 1) % raw.size()].values);
    const FeatureMapConfig fm{};
    const double kxy = quantum_kernel(x, y, fm);
    diag = std::max(diag, std::abs(quantum_kernel(x, x, fm) - 1.0));
    asym = std::max(asym, std::abs(kxy - quantum_kernel(y, x, fm)));
    lo = std::min(lo, kxy);
    hi = std::max(hi, kxy);
    diag = std::max(diag, std::abs(rbf_kernel(x, x, 0.5) - 1.0));
    asym = std::max(asym, std::abs(rbf_kernel(x, y, 0.5) - rbf_kernel(y, x, 0.5)));
  }
  const bool ok = diag <= 1e-12 && asym <= 1e-12 && lo >= 0.0 && hi <= 1.0 + 1e-12;
  return {ok, fmt("max |k(x,x)-1| %.1e, max asymmetry %.1e, range [%.3g, %.3g]", diag, asym, lo, hi)};
}

Outcome hilbert_dimension() {
  const auto st = feature_map_state(std::vector<double>{0.1, -0.2, 0.3, 0.4, -0.5}, {});
  return {st.dim() == 32, fmt("%zu amplitudes", st.dim())};
}

Outcome levinson_vs_direct() {
  std::mt19937_64 rng(5);
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const int p = 1 + trial % 10;
    const auto acov = oracle::random_acov(rng, p);
    const auto a = levinson_durbin(acov, p).phi;
    const auto b = yule_walker_direct(acov, p);
    for (int k = 0; k < p; ++k) worst = std::max(worst, std::abs(a[std::size_t(k)] - b[std::size_t(k)]));
  }
  return {worst <= 1e-10, fmt("500 sequences, p <= 10, max-abs diff %.2e", worst)};
}

Outcome order_selection() {
  const std::vector<double> phi{0.5, -0.3, 0.2, -0.15, 0.1};
  int hits = 0, oracle_agree = 0;
  std::map<int, int> wide_aic, wide_bic;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto y = oracle::simulate_ar(phi, 10000, 5000 + s);
    const int p = select_order(y, 5).order;
    hits += p == 5;
    oracle_agree += p == oracle::aic_order(y, 5);
    wide_aic[select_order(y, 10).order]++;
    wide_bic[select_order(y, 10, InformationCriterion::bic).order]++;
  }
  const bool ok = hits >= 95 && oracle_agree == 100;
  return {ok, fmt("AIC p_max=5 picks 5 in %d/100 (direct-AIC agreement %d/100); p_max=10: AIC %d/100, "
                  "BIC %d/100",
                  hits, oracle_agree, wide_aic[5], wide_bic[5])};
}

Outcome quantum_vs_rbf() {
  bool ok = true;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    ExperimentConfig cfg;
    cfg.seed = seed;
    const auto table = build_feature_table(cfg);
    const auto r = evaluate_all(train_all(table, cfg), table, cfg);
    double min_q = 1.0;
    for (double d : cfg.distances) min_q = std::min(min_q, r.mean_over_channels("quantum", d));
    const double q_far = r.mean_over_channels("quantum", cfg.distances.back());
    const double c_far = r.mean_over_channels("rbf", cfg.distances.back());
    ok = ok && min_q >= 0.90 && q_far >= c_far;
    detail += fmt("%sseed %d: min Q %.3f, 3 m Q %.3f vs RBF %.3f", seed ? "; " : "", int(seed), min_q,
                  q_far, c_far);
  }
  return {ok, detail};
}

Outcome nu_property() {
  int checked = 0, bad = 0;
  std::uint64_t seed = 0;
  for (double nu : {0.05, 0.1, 0.2}) {
    for (std::size_t n : {20, 50, 100}) {
      for (int rep = 0; rep < 5; ++rep) {
        std::mt19937_64 rng(seed++);
        const auto xs = oracle::gaussian_cluster(rng, n, 2);
        const auto k = oracle::rbf_gram(xs, 0.5);
        const auto m = train(k, OcSvmConfig{nu, 1e-6, 100000});
        const auto preds = predict_batch(m, k);
        const double outliers =
            double(std::count(preds.begin(), preds.end(), kAnomaly)) / double(n);
        const double svs = double(m.support_indices.size()) / double(n);
        ++checked;
        bad += !(outliers <= nu + 2.0 / double(n) && svs >= nu - 2.0 / double(n));
      }
    }
  }
  return {bad == 0, fmt("%d/%d instances within the nu bounds", checked - bad, checked)};
}

Outcome qp_oracle() {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> size(10, 60);
  std::uniform_real_distribution<double> nu_d(0.05, 0.5), gamma_d(0.1, 2.0);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto n = std::size_t(size(rng));
    const double nu = nu_d(rng);
    const auto k = oracle::rbf_gram(oracle::gaussian_cluster(rng, n, 3), gamma_d(rng));
    const auto m = train(k, OcSvmConfig{nu, 1e-6, 100000});
    const double ref = oracle::ocsvm_objective(k, nu);
    worst = std::max(worst, std::abs(m.objective(k) - ref) / std::abs(ref));
  }
  return {worst <= 1e-6, fmt("20 instances, n <= 60, max relative objective gap %.2e", worst)};
}

Outcome circuit_oracle() {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double worst = 0.0;
  for (int n = 1; n <= 3; ++n) {
    for (int t = 0; t < 100; ++t) {
      std::vector<double> x(static_cast<std::size_t>(n));
      for (auto& v : x) v = u(rng);
      const FeatureMapConfig cfg{n, 2, t % 2 ? Entangler::ring : Entangler::linear_chain,
                                 std::numbers::pi};
      const auto s = feature_map_state(x, cfg);
      const auto ref = oracle::feature_map(x, cfg);
      for (std::size_t k = 0; k < s.dim(); ++k) worst = std::max(worst, std::abs(s[k] - ref(Eigen::Index(k))));
    }
  }
  return {worst <= 1e-10, fmt("n = 1..3, 100 inputs each, max amplitude error %.2e", worst)};
}

Outcome gram_psd() {
  double min_rbf = 1.0, min_q = 1.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    std::vector<FeatureVector> xs;
    for (auto& row : oracle::gaussian_cluster(rng, 200, 5, 0.5)) xs.push_back({row, std::nullopt});
    const auto s = fit_standardizer(xs);
    min_rbf = std::min(min_rbf, min_eigenvalue(
                                    detail::kernel_block(xs, xs, KernelConfig::rbf(0.5), s, true)));
    min_q = std::min(min_q, min_eigenvalue(detail::kernel_block(
                                xs, xs, KernelConfig::quantum(), Standardizer::identity(5), true)));
  }
  const bool ok = min_rbf >= kPsdTolerance && min_q >= kPsdTolerance;
  return {ok, fmt("10 seeds x 200 samples, min eigenvalue RBF %.2e, quantum %.2e", min_rbf, min_q)};
}

Outcome quadrant_separation() {
  bool ok = true;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    ExperimentConfig cfg;
    cfg.seed = seed;
    const auto table = build_feature_table(cfg);
    const auto r = evaluate_all(train_all(table, cfg), table, cfg);
    std::map<Quadrant, int> con, cha;
    int n_con = 0, n_cha = 0;
    for (const auto& c : r.cells) {
      if (c.key.kernel != "quantum") continue;
      for (const auto& p : c.scatter) {
        if (p.predicted != kAnomaly) continue;
        const auto q = quadrant_of(p.x3, p.x4).quadrant;
        if (p.condition == SceneLabel{1, 0}) ++con[q], ++n_con;
        if (p.condition == SceneLabel{0, 1}) ++cha[q], ++n_cha;
      }
    }
    auto modal = [](const std::map<Quadrant, int>& m) {
      return std::max_element(m.begin(), m.end(),
                              [](auto& a, auto& b) { return a.second < b.second; });
    };
    if (con.empty() || cha.empty()) {
      ok = false;
      detail += fmt("%sseed %d: no flagged single-machine anomalies", seed ? "; " : "", int(seed));
      continue;
    }
    const auto mc = modal(con), mh = modal(cha);
    const double fc = double(mc->second) / n_con, fh = double(mh->second) / n_cha;
    ok = ok && fc >= 0.8 && fh >= 0.8 && mc->first != mh->first;
    detail += fmt("%sseed %d: CON %.2f in %s, CHA %.2f in %s", seed ? "; " : "", int(seed), fc,
                  std::string(to_string(mc->first)).c_str(), fh,
                  std::string(to_string(mh->first)).c_str());
  }
  return {ok, detail};
}

Outcome statistics_oracle() {
  const auto r = paired_t_test(std::vector<double>{1, 2, 3}, std::vector<double>{0, 0, 0});
  const double t_hand = 2.0 / (1.0 / std::sqrt(3.0));
  // df = 2 has the closed form p = 1 - t / sqrt(t^2 + 2)
  const double p_hand = 1.0 - t_hand / std::sqrt(t_hand * t_hand + 2.0);
  const double eps = 0.25;
  const std::vector<double> a{1, 1, 1, 1 + eps}, b{0, 0, 0, eps};
  const double var = (3 * std::pow(eps / 4, 2) + std::pow(3 * eps / 4, 2)) / 3.0;
  const double d_hand = 1.0 / std::sqrt(var);
  const double d_summary = cohens_d(0.988, 0.013, 0.743, 0.257);
  const double d_summary_hand = 0.245 / std::sqrt((0.013 * 0.013 + 0.257 * 0.257) / 2.0);
  const double p_crit = student_t_two_sided_p(4.303, 2);
  const bool ok = std::abs(r.t - t_hand) <= 1e-6 && r.df == 2 && std::abs(r.p - p_hand) <= 1e-6 &&
                  std::abs(cohens_d(a, b) - d_hand) <= 1e-6 &&
                  std::abs(d_summary - d_summary_hand) <= 1e-6 && std::abs(p_crit - 0.05) <= 1e-3;
  return {ok, fmt("t %.6f (df %d, p %.6f), d %.6f, d from summaries %.4f, p(4.303, 2) = %.5f", r.t,
                  r.df, r.p, cohens_d(a, b), d_summary, p_crit)};
}

}  // namespace

int main() {
  run(1, "dataset composition", 1.0, dataset_composition);
  run(2, "confusion-matrix metrics", 1.0, metric_derivation);
  run(3, "fidelity kernel identities", 5.0, kernel_identities);
  run(4, "Hilbert space dimension", 1.0, hilbert_dimension);
  run(5, "Levinson-Durbin vs direct solve", 10.0, levinson_vs_direct);
  run(6, "AR(5) order selection", 30.0, order_selection);
  run(7, "quantum vs RBF on the benchmark", 600.0, quantum_vs_rbf);
  run(8, "nu-property", 30.0, nu_property);
  run(9, "QP solver vs projected gradient", 60.0, qp_oracle);
  run(10, "circuit vs dense unitary oracle", 5.0, circuit_oracle);
  run(11, "Gram matrices PSD", 60.0, gram_psd);
  run(12, "quadrant separation", 300.0, quadrant_separation);
  run(13, "statistics oracle", 1.0, statistics_oracle);
  std::printf("%d of 13 criteria failed\n", failures);
  return failures ? 1 : 0;
}
