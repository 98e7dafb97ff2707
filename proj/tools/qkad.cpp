// qkad: synthesize, featurize, train and evaluate the acoustic anomaly detectors.
//
//   qkad synth    [--config c.json] [--seed N] [--output-dir out]
//   qkad features [--dataset out/dataset]
//   qkad train    [--features out/features.csv]
//   qkad eval     [--features ...] [--models out/models] [--scope test|all] [--check]
//   qkad bench    (synth + features + train + eval) [--check]
//   qkad state    --x 0.1,0.2,0.3,0.4,0.5   (debug: 32 amplitudes as JSON)
//
// Exit codes: 0 ok, 1 validation or input failure, 2 --check failure.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qkad/pipeline.hpp"

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string output_dir;
  std::string scope;
  std::string dataset_dir;
  std::string features_path;
  std::string models_dir;
  bool check = false;
  std::vector<double> state_x;
  std::string entangler = "linear_chain";
};

qkad::ExperimentConfig resolve_config(const Options& o) {
  qkad::ExperimentConfig cfg =
      o.config_path.empty() ? qkad::ExperimentConfig{} : qkad::load_config(o.config_path);
  if (o.seed) cfg.seed = *o.seed;
  if (!o.output_dir.empty()) cfg.output_dir = o.output_dir;
  if (!o.scope.empty()) {
    qkad::detail::require(o.scope == "test" || o.scope == "all", qkad::Errc::invalid_argument,
                          "scope must be test or all");
    cfg.scope = o.scope == "test" ? qkad::EvalScope::test : qkad::EvalScope::all;
  }
  cfg.validate();
  return cfg;
}

qkad::fs::path or_default(const std::string& given, const qkad::fs::path& fallback) {
  return given.empty() ? fallback : qkad::fs::path(given);
}

void print_run(const qkad::RunResult& r) {
  std::printf("%-6s %-4s %-8s %9s %7s\n", "dist", "ch", "kernel", "accuracy", "f1");
  for (const auto& c : r.cells) {
    std::printf("%-6s %-4s %-8s %9.4f %7.4f\n", qkad::format_g6(c.key.distance_m).c_str(),
                c.key.channel.c_str(), c.key.kernel.c_str(), c.report.accuracy, c.report.f1);
  }
}

int finish_check(const Options& o, const qkad::RunResult& r, const qkad::ExperimentConfig& cfg) {
  if (!o.check) return 0;
  const auto outcome = qkad::check_properties(r, cfg);
  for (const auto& line : outcome.lines) std::cout << line << '\n';
  return outcome.passed ? 0 : 2;
}

int run(const std::string& command, const Options& o) {
  if (command == "state") {
    qkad::FeatureMapConfig fm;
    fm.n_qubits = int(o.state_x.size());
    fm.entangler = o.entangler == "ring" ? qkad::Entangler::ring : qkad::Entangler::linear_chain;
    qkad::detail::require(o.entangler == "ring" || o.entangler == "linear_chain",
                          qkad::Errc::invalid_argument, "entangler");
    const auto state = qkad::feature_map_state(o.state_x, fm);
    qkad::json amps = qkad::json::array();
    for (const auto& a : state.amplitudes()) amps.push_back({a.real(), a.imag()});
    std::cout << qkad::json{{"n_qubits", fm.n_qubits}, {"amplitudes", amps}}.dump() << '\n';
    return 0;
  }

  const auto cfg = resolve_config(o);
  const qkad::fs::path out(cfg.output_dir);
  qkad::write_effective_config(cfg);
  const auto dataset_dir = or_default(o.dataset_dir, out / "dataset");
  const auto features_path = or_default(o.features_path, out / "features.csv");
  const auto models_dir = or_default(o.models_dir, out / "models");

  auto do_synth = [&] {
    const auto s = qkad::cmd_synth(cfg, dataset_dir);
    std::cout << "wrote " << s.files << " recordings to " << dataset_dir.string() << " ("
              << s.train << " train / " << s.test << " test per cell)\n";
  };
  auto do_features = [&] {
    const auto table = qkad::cmd_features(cfg, dataset_dir);
    qkad::detail::write_text(features_path, qkad::features_to_csv(table, cfg.ar_order));
    std::cout << "wrote " << table.size() << " feature rows to " << features_path.string() << '\n';
  };
  auto do_train = [&] {
    const auto table = qkad::features_from_csv(qkad::detail::read_text(features_path));
    const auto cells = qkad::cmd_train(cfg, table, models_dir);
    std::cout << "trained " << cells.size() << " models into " << models_dir.string() << '\n';
  };
  auto do_eval = [&] {
    const auto table = qkad::features_from_csv(qkad::detail::read_text(features_path));
    const auto r = qkad::cmd_eval(cfg, table, models_dir, out / "eval");
    print_run(r);
    return finish_check(o, r, cfg);
  };

  if (command == "synth") {
    do_synth();
    return 0;
  }
  if (command == "features") {
    do_features();
    return 0;
  }
  if (command == "train") {
    do_train();
    return 0;
  }
  if (command == "eval") return do_eval();
  do_synth();
  do_features();
  do_train();
  return do_eval();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum-kernel acoustic anomaly detection"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config_path, "JSON experiment config")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "Dataset and CV seed");
  app.add_option("--output-dir", o.output_dir, "Output directory");
  app.add_flag("--check", o.check, "Exit 2 unless the directional accuracy properties hold");

  auto* synth = app.add_subcommand("synth", "Render the labelled WAV dataset");
  auto* features = app.add_subcommand("features", "Extract AR coefficients from the dataset");
  features->add_option("--dataset", o.dataset_dir, "Dataset directory with manifest.json");
  auto* train = app.add_subcommand("train", "Fit one detector per distance, channel and kernel");
  train->add_option("--features", o.features_path, "features.csv");
  auto* eval = app.add_subcommand("eval", "Score the held-out split and write reports");
  eval->add_option("--features", o.features_path, "features.csv");
  eval->add_option("--models", o.models_dir, "Model directory");
  eval->add_option("--scope", o.scope, "test or all")->check(CLI::IsMember({"test", "all"}));
  auto* bench = app.add_subcommand("bench", "Run synth, features, train and eval");
  bench->add_option("--scope", o.scope, "test or all")->check(CLI::IsMember({"test", "all"}));
  auto* state = app.add_subcommand("state", "Print the feature-map statevector as JSON");
  state->add_option("--x", o.state_x, "Comma-separated inputs, one per qubit")
      ->delimiter(',')
      ->required();
  state->add_option("--entangler", o.entangler, "linear_chain or ring");
  for (auto* sub : {synth, features, train, eval, bench, state}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    return run(app.get_subcommands().front()->get_name(), o);
  } catch (const qkad::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
