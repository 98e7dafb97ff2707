#pragma once

// End-to-end experiment: dataset synthesis per operating condition, AR feature
// extraction, per-cell training and evaluation, and artifact emission.
//
// A cell is one (distance, channel, kernel) combination. Output layout:
//   <out>/effective_config.json
//   <out>/dataset/manifest.json, <out>/dataset/audio/*.wav
//   <out>/features.csv
//   <out>/models/<cell>.json
//   <out>/eval/results.json, table.csv, sweep.csv, scatter/<cell>.csv

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qkad/armodel.hpp"
#include "qkad/eval.hpp"
#include "qkad/gamma_selection.hpp"
#include "qkad/kernels.hpp"
#include "qkad/ocsvm.hpp"
#include "qkad/serialization.hpp"
#include "qkad/signal.hpp"

namespace qkad {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct DatasetCounts {
  int normal = 60;  // 0/0
  int cha_only = 30;  // 0/1
  int con_only = 30;  // 1/0
  int both = 30;      // 1/1
  int train_normals = 40;

  int count(const SceneLabel& l) const {
    if (l.is_normal()) return normal;
    if (l.con_state == 0) return cha_only;
    if (l.cha_state == 0) return con_only;
    return both;
  }
  int total() const { return normal + cha_only + con_only + both; }
};

/// Pickup gains of one microphone channel. `near` applies below near_distance_m.
struct ChannelPreset {
  std::string name;
  double near_con_gain_db = 0.0;
  double near_cha_gain_db = 0.0;
  double far_con_gain_db = 0.0;
  double far_cha_gain_db = 0.0;
  double near_distance_m = 0.5;

  std::pair<double, double> gains(double distance_m) const {
    return distance_m < near_distance_m ? std::pair{near_con_gain_db, near_cha_gain_db}
                                        : std::pair{far_con_gain_db, far_cha_gain_db};
  }
};

/// CH1 hears mainly CHA at 0 m, CH3 mainly CON, CH2 both; all mix beyond 0 m.
inline std::vector<ChannelPreset> default_channels() {
  return {{"CH1", -9.0, 0.0, -1.0, 0.0, 0.5},
          {"CH2", 0.0, 0.0, 0.0, 0.0, 0.5},
          {"CH3", 0.0, -9.0, 0.0, -1.0, 0.5}};
}

struct NamedKernel {
  std::string name;
  KernelConfig config;
};

enum class EvalScope { test, all };

struct ExperimentConfig {
  DatasetCounts dataset{};
  std::vector<double> distances{0.0, 1.0, 2.0, 3.0};
  std::vector<ChannelPreset> channels = default_channels();
  int ar_order = 5;
  std::vector<NamedKernel> kernels{{"quantum", KernelConfig::quantum()},
                                   {"rbf", KernelConfig::rbf(0.1)}};
  std::vector<double> gamma_grid = default_gamma_grid();
  int cv_folds = 5;
  OcSvmConfig ocsvm{};
  std::uint64_t seed = 0;
  std::string output_dir = "qkad_out";
  EvalScope scope = EvalScope::test;

  // Scene generation.
  MachineSpec con = default_conveyor();
  MachineSpec cha = default_chain_belt();
  int sample_rate_hz = 16000;
  int window = 3000;
  double noise_floor_db = 36.0;
  double anomaly_impulse_rate_hz = 40.0;
  double click_decay_s = 0.005;
  AttenuationTable attenuation{};
  double cell_time_budget_s = 60.0;

  void validate() const {
    detail::require(dataset.train_normals >= 0 && dataset.train_normals <= dataset.normal,
                    Errc::invalid_argument, "training count exceeds normal count");
    detail::require(!distances.empty() && !channels.empty() && !kernels.empty(),
                    Errc::invalid_argument, "empty experiment axis");
    detail::require(ar_order >= 1, Errc::invalid_argument, "ar_order must be positive");
    detail::require(window > ar_order, Errc::invalid_argument, "window must exceed ar_order");
    std::set<std::string> names;
    for (const auto& k : kernels) {
      detail::require(names.insert(k.name).second, Errc::invalid_argument,
                      "duplicate kernel name " + k.name);
      k.config.validate();
    }
    ocsvm.validate();
  }
};

inline std::string to_string(EvalScope s) { return s == EvalScope::test ? "test" : "all"; }

inline json config_to_json(const ExperimentConfig& c) {
  json kernels = json::array();
  for (const auto& k : c.kernels) {
    json kj = k.config;
    kj["name"] = k.name;
    kernels.push_back(kj);
  }
  json channels = json::array();
  for (const auto& ch : c.channels) {
    channels.push_back({{"name", ch.name},
                        {"near_con_gain_db", ch.near_con_gain_db},
                        {"near_cha_gain_db", ch.near_cha_gain_db},
                        {"far_con_gain_db", ch.far_con_gain_db},
                        {"far_cha_gain_db", ch.far_cha_gain_db},
                        {"near_distance_m", ch.near_distance_m}});
  }
  json attenuation = json::array();
  for (const auto& [d, a] : c.attenuation.points) attenuation.push_back({d, a});
  return json{
      {"dataset",
       {{"normal", c.dataset.normal},
        {"cha_only", c.dataset.cha_only},
        {"con_only", c.dataset.con_only},
        {"both", c.dataset.both},
        {"train_normals", c.dataset.train_normals}}},
      {"distances", c.distances},
      {"channels", channels},
      {"ar_order", c.ar_order},
      {"kernels", kernels},
      {"gamma_grid", c.gamma_grid},
      {"cv_folds", c.cv_folds},
      {"ocsvm", c.ocsvm},
      {"seed", c.seed},
      {"output_dir", c.output_dir},
      {"scope", to_string(c.scope)},
      {"scene",
       {{"con", c.con},
        {"cha", c.cha},
        {"sample_rate_hz", c.sample_rate_hz},
        {"window", c.window},
        {"noise_floor_db", c.noise_floor_db},
        {"anomaly_impulse_rate_hz", c.anomaly_impulse_rate_hz},
        {"click_decay_s", c.click_decay_s},
        {"attenuation", attenuation}}},
      {"cell_time_budget_s", c.cell_time_budget_s},
  };
}

/// Missing keys keep their defaults.
inline ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    c.dataset.normal = d.value("normal", c.dataset.normal);
    c.dataset.cha_only = d.value("cha_only", c.dataset.cha_only);
    c.dataset.con_only = d.value("con_only", c.dataset.con_only);
    c.dataset.both = d.value("both", c.dataset.both);
    c.dataset.train_normals = d.value("train_normals", c.dataset.train_normals);
  }
  c.distances = j.value("distances", c.distances);
  if (j.contains("channels")) {
    c.channels.clear();
    for (const auto& ch : j.at("channels")) {
      ChannelPreset p;
      p.name = ch.at("name").get<std::string>();
      p.near_con_gain_db = ch.value("near_con_gain_db", 0.0);
      p.near_cha_gain_db = ch.value("near_cha_gain_db", 0.0);
      p.far_con_gain_db = ch.value("far_con_gain_db", 0.0);
      p.far_cha_gain_db = ch.value("far_cha_gain_db", 0.0);
      p.near_distance_m = ch.value("near_distance_m", 0.5);
      c.channels.push_back(p);
    }
  }
  c.ar_order = j.value("ar_order", c.ar_order);
  if (j.contains("kernels")) {
    c.kernels.clear();
    for (const auto& kj : j.at("kernels")) {
      const auto cfg = kj.get<KernelConfig>();
      c.kernels.push_back({kj.value("name", std::string(to_string(cfg.kind()))), cfg});
    }
  }
  c.gamma_grid = j.value("gamma_grid", c.gamma_grid);
  c.cv_folds = j.value("cv_folds", c.cv_folds);
  if (j.contains("ocsvm")) c.ocsvm = j.at("ocsvm").get<OcSvmConfig>();
  c.seed = j.value("seed", c.seed);
  c.output_dir = j.value("output_dir", c.output_dir);
  if (j.contains("scope")) {
    const auto s = j.at("scope").get<std::string>();
    detail::require(s == "test" || s == "all", Errc::invalid_argument, "scope '" + s + "'");
    c.scope = s == "test" ? EvalScope::test : EvalScope::all;
  }
  if (j.contains("scene")) {
    const auto& s = j.at("scene");
    if (s.contains("con")) {
      c.con = default_conveyor();
      from_json(s.at("con"), c.con);
      c.con.machine_id = MachineId::CON;
    }
    if (s.contains("cha")) {
      c.cha = default_chain_belt();
      from_json(s.at("cha"), c.cha);
      c.cha.machine_id = MachineId::CHA;
    }
    c.sample_rate_hz = s.value("sample_rate_hz", c.sample_rate_hz);
    c.window = s.value("window", c.window);
    c.noise_floor_db = s.value("noise_floor_db", c.noise_floor_db);
    c.anomaly_impulse_rate_hz = s.value("anomaly_impulse_rate_hz", c.anomaly_impulse_rate_hz);
    c.click_decay_s = s.value("click_decay_s", c.click_decay_s);
    if (s.contains("attenuation")) {
      c.attenuation.points.clear();
      for (const auto& p : s.at("attenuation")) {
        c.attenuation.points.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
      }
    }
  }
  c.cell_time_budget_s = j.value("cell_time_budget_s", c.cell_time_budget_s);
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::missing_file, path.string());
  try {
    return config_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_argument, std::string("config: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Small I/O helpers
// ---------------------------------------------------------------------------

namespace detail {

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error(Errc::io_failure, path.string());
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::missing_file, path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw Error(Errc::malformed_file, path.string() + ": " + e.what());
  }
}

inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Rounds every float in a JSON tree to six significant digits.
inline json round_floats(json j) {
  if (j.is_number_float()) return round_g6(j.get<double>());
  if (j.is_structured()) {
    for (auto& v : j) v = round_floats(v);
  }
  return j;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::string distance_tag(double d) {
  std::string s = format_g6(d);
  for (char& c : s) {
    if (c == '.') c = 'p';
  }
  return "d" + s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

enum class Split { train, test };

inline std::string to_string(Split s) { return s == Split::train ? "train" : "test"; }
inline Split parse_split(const std::string& s) {
  detail::require(s == "train" || s == "test", Errc::malformed_file, "split '" + s + "'");
  return s == "train" ? Split::train : Split::test;
}

struct SampleInfo {
  std::string id;
  SceneLabel label;
  double distance_m = 0.0;
  std::string channel;
  Split split = Split::test;
};

inline std::string sample_id(const SampleInfo& s, int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", index);
  return detail::distance_tag(s.distance_m) + "_" + s.channel + "_c" +
         std::to_string(s.label.con_state) + std::to_string(s.label.cha_state) + "_" + buf;
}

/// Rounds to the 16-bit PCM grid so in-memory and WAV-backed runs agree exactly.
inline TimeSeries quantize_pcm16(const TimeSeries& ts) {
  std::vector<double> q(ts.size());
  auto s = ts.samples();
  for (std::size_t i = 0; i < q.size(); ++i) {
    q[i] = std::clamp(std::round(s[i] * 32768.0), -32768.0, 32767.0) / 32768.0;
  }
  return TimeSeries(std::move(q), ts.sample_rate_hz());
}

/// Visits every recording of the dataset in a fixed order. The same scene seed
/// is shared by all channels at one distance (one physical recording, several
/// microphones).
template <class Visitor>
void for_each_recording(const ExperimentConfig& cfg, Visitor&& visit) {
  cfg.validate();
  const double duration = double(cfg.window) / cfg.sample_rate_hz;
  for (std::size_t di = 0; di < cfg.distances.size(); ++di) {
    const double distance = cfg.distances[di];
    int index = 0;
    for (const auto& cond : all_conditions()) {
      const int count = cfg.dataset.count(cond);
      for (int k = 0; k < count; ++k, ++index) {
        const std::uint64_t scene_seed = detail::splitmix64(
            detail::splitmix64(cfg.seed) ^ detail::splitmix64((std::uint64_t(di) << 32) | index));
        const Split split =
            cond.is_normal() && k < cfg.dataset.train_normals ? Split::train : Split::test;
        std::optional<SceneComponents> components;
        for (const auto& ch : cfg.channels) {
          SceneConfig scene;
          scene.con_state = cond.con_state;
          scene.cha_state = cond.cha_state;
          scene.distance_m = distance;
          scene.noise_floor_db = cfg.noise_floor_db;
          scene.anomaly_impulse_rate_hz = cfg.anomaly_impulse_rate_hz;
          scene.seed = scene_seed;
          scene.sample_rate_hz = cfg.sample_rate_hz;
          scene.click_decay_s = cfg.click_decay_s;
          scene.attenuation = cfg.attenuation;
          std::tie(scene.con_gain_db, scene.cha_gain_db) = ch.gains(distance);

          SampleInfo info{"", cond, distance, ch.name, split};
          info.id = sample_id(info, index);
          visit(info, [&] {
            if (!components) components = render_components(cfg.con, cfg.cha, scene, duration);
            return quantize_pcm16(mix_channel(*components, scene));
          });
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Feature table
// ---------------------------------------------------------------------------

struct FeatureRow {
  std::string sample_id;
  FeatureVector features;  // source_label populated
  double distance_m = 0.0;
  std::string channel;
  Split split = Split::test;

  const SceneLabel& label() const { return *features.source_label; }
};

using FeatureTable = std::vector<FeatureRow>;

/// One row per window of every recording.
inline void append_features(FeatureTable& table, const SampleInfo& info, const TimeSeries& ts,
                            const ExperimentConfig& cfg) {
  const auto windows = segment(ts, std::size_t(cfg.window), std::size_t(cfg.window));
  for (std::size_t w = 0; w < windows.size(); ++w) {
    FeatureRow row;
    row.sample_id = windows.size() == 1 ? info.id : info.id + "_w" + std::to_string(w);
    row.features = extract_features(windows[w], cfg.ar_order);
    row.features.source_label = info.label;
    row.distance_m = info.distance_m;
    row.channel = info.channel;
    row.split = info.split;
    table.push_back(std::move(row));
  }
}

/// Synthesis and feature extraction without touching the filesystem.
inline FeatureTable build_feature_table(const ExperimentConfig& cfg) {
  FeatureTable table;
  for_each_recording(cfg, [&](const SampleInfo& info, auto&& render) {
    append_features(table, info, render(), cfg);
  });
  return table;
}

inline std::string features_to_csv(const FeatureTable& table, int order) {
  std::string out;
  for (int i = 1; i <= order; ++i) out += "phi_" + std::to_string(i) + ",";
  out += "con_state,cha_state,distance_m,channel,split,sample_id\n";
  for (const auto& r : table) {
    detail::require(int(r.features.dim()) == order, Errc::dimension_mismatch, "feature row");
    for (double v : r.features.values) out += detail::format_g17(v) + ",";
    out += std::to_string(r.label().con_state) + "," + std::to_string(r.label().cha_state) + "," +
           format_g6(r.distance_m) + "," + r.channel + "," + to_string(r.split) + "," +
           r.sample_id + "\n";
  }
  return out;
}

inline FeatureTable features_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  auto split_line = [](const std::string& l) {
    std::vector<std::string> cells;
    std::stringstream ss(l);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  const auto header = split_line(line);
  int order = 0;
  while (order < int(header.size()) && header[std::size_t(order)].rfind("phi_", 0) == 0) ++order;
  detail::require(order >= 1 && header.size() == std::size_t(order) + 6, Errc::malformed_file,
                  "features header");
  FeatureTable table;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split_line(line);
    detail::require(c.size() == header.size(), Errc::malformed_file, "features row: " + line);
    FeatureRow r;
    try {
      for (int i = 0; i < order; ++i) r.features.values.push_back(std::stod(c[std::size_t(i)]));
      const auto o = std::size_t(order);
      r.features.source_label = SceneLabel{std::stoi(c[o]), std::stoi(c[o + 1])};
      r.distance_m = std::stod(c[o + 2]);
      r.channel = c[o + 3];
      r.split = parse_split(c[o + 4]);
      r.sample_id = c[o + 5];
    } catch (const std::logic_error&) {
      throw Error(Errc::malformed_file, "features row: " + line);
    }
    table.push_back(std::move(r));
  }
  return table;
}

// ---------------------------------------------------------------------------
// Cells
// ---------------------------------------------------------------------------

struct CellKey {
  double distance_m = 0.0;
  std::string channel;
  std::string kernel;

  std::string tag() const { return detail::distance_tag(distance_m) + "_" + channel + "_" + kernel; }
};

inline std::vector<const FeatureRow*> cell_rows(const FeatureTable& table, double distance,
                                                const std::string& channel) {
  std::vector<const FeatureRow*> out;
  for (const auto& r : table) {
    if (r.channel == channel && std::abs(r.distance_m - distance) < 1e-9) out.push_back(&r);
  }
  return out;
}

inline std::vector<FeatureVector> vectors_of(const std::vector<const FeatureRow*>& rows) {
  std::vector<FeatureVector> out;
  out.reserve(rows.size());
  for (const auto* r : rows) out.push_back(r->features);
  return out;
}

/// Training rows must be split=train normals; anything else is leakage.
inline std::vector<FeatureVector> training_vectors(const std::vector<const FeatureRow*>& rows) {
  std::vector<FeatureVector> out;
  for (const auto* r : rows) {
    if (r->split != Split::train) continue;
    detail::require(r->label().is_normal(), Errc::invalid_argument,
                    "training split contains an anomalous sample: " + r->sample_id);
    out.push_back(r->features);
  }
  return out;
}

inline std::vector<const FeatureRow*> evaluation_rows(const std::vector<const FeatureRow*>& rows,
                                                      EvalScope scope) {
  std::vector<const FeatureRow*> out;
  for (const auto* r : rows) {
    if (scope == EvalScope::all || r->split == Split::test) out.push_back(r);
  }
  return out;
}

/// Binds a model to the training data and configuration it was fit on.
inline std::string cell_hash(const Standardizer& train_stats, const NamedKernel& kernel,
                             const ExperimentConfig& cfg) {
  json j{{"standardizer", train_stats},
         {"kernel", kernel.config},
         {"ar_order", cfg.ar_order},
         {"ocsvm", cfg.ocsvm},
         {"gamma_grid", cfg.gamma_grid},
         {"cv_folds", cfg.cv_folds}};
  return hex64(fnv1a(j.dump()));
}

struct TrainedCell {
  CellKey key;
  Detector detector;
  Standardizer quadrant_standardizer;  // training statistics for the phi_3/phi_4 plane
  std::string config_hash;
  std::optional<GammaSelection> gamma_selection;
  double wall_time_s = 0.0;
};

inline TrainedCell train_cell(const std::vector<FeatureVector>& train_set, const CellKey& key,
                              const NamedKernel& kernel, const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  detail::require(train_set.size() >= 2, Errc::too_few_samples,
                  "cell " + key.tag() + " has " + std::to_string(train_set.size()) +
                      " training normals");
  TrainedCell cell;
  cell.key = key;
  cell.quadrant_standardizer = fit_standardizer(train_set);
  cell.config_hash = cell_hash(cell.quadrant_standardizer, kernel, cfg);

  KernelConfig kc = kernel.config;
  if (auto* rbf = std::get_if<RbfParams>(&kc.params)) {
    auto sel = select_gamma(train_set, cfg.gamma_grid, cfg.ocsvm, cfg.cv_folds, cfg.seed);
    rbf->gamma = sel.gamma;
    cell.gamma_selection = std::move(sel);
  }
  cell.detector = fit_detector(train_set, kc, cfg.ocsvm);
  cell.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (cell.wall_time_s > cfg.cell_time_budget_s) {
    detail::warn("cell " + key.tag() + " exceeded its time budget");
  }
  return cell;
}

inline json trained_cell_to_json(const TrainedCell& c) {
  json j = detector_to_json(c.detector);
  j["cell"] = {{"distance_m", c.key.distance_m}, {"channel", c.key.channel}, {"kernel", c.key.kernel}};
  j["quadrant_standardizer"] = c.quadrant_standardizer;
  j["config_hash"] = c.config_hash;
  if (c.gamma_selection) {
    json scores = json::array();
    for (const auto& s : c.gamma_selection->scores) {
      scores.push_back({{"gamma", s.gamma},
                        {"acceptance", s.acceptance},
                        {"sv_fraction", s.sv_fraction},
                        {"feasible", s.feasible}});
    }
    j["gamma_cv"] = {{"selected", c.gamma_selection->gamma}, {"scores", scores}};
  }
  j["wall_time_s"] = c.wall_time_s;
  return j;
}

inline TrainedCell trained_cell_from_json(const json& j) {
  TrainedCell c;
  c.detector = detector_from_json(j);
  const auto& cell = j.at("cell");
  c.key = {cell.at("distance_m").get<double>(), cell.at("channel").get<std::string>(),
           cell.at("kernel").get<std::string>()};
  c.quadrant_standardizer = j.at("quadrant_standardizer").get<Standardizer>();
  c.config_hash = j.at("config_hash").get<std::string>();
  if (j.contains("gamma_cv")) {
    GammaSelection sel;
    sel.gamma = j.at("gamma_cv").at("selected").get<double>();
    c.gamma_selection = sel;
  }
  c.wall_time_s = j.value("wall_time_s", 0.0);
  return c;
}

/// Trains every (distance, channel, kernel) cell.
inline std::vector<TrainedCell> train_all(const FeatureTable& table, const ExperimentConfig& cfg) {
  std::vector<TrainedCell> cells;
  for (double d : cfg.distances) {
    for (const auto& ch : cfg.channels) {
      const auto rows = cell_rows(table, d, ch.name);
      const auto train_set = training_vectors(rows);
      for (const auto& k : cfg.kernels) {
        cells.push_back(train_cell(train_set, CellKey{d, ch.name, k.name}, k, cfg));
      }
    }
  }
  return cells;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

struct CellResult {
  CellKey key;
  MetricsReport report;  // anomaly = positive
  ConfusionMatrix confusion;
  double f1_normal_positive = 0.0;
  std::vector<SweepRow> sweep;
  std::vector<ScatterPoint> scatter;
  json hyperparameters;
  double wall_time_s = 0.0;
};

struct PairStatistics {
  std::string metric;
  std::string kernel_a;
  std::string kernel_b;
  std::vector<double> a;  // per-distance, channel-averaged
  std::vector<double> b;
  std::optional<TTestResult> t_test;
  std::optional<double> cohens_d;
  std::string note;
};

struct RunResult {
  std::vector<CellResult> cells;
  std::vector<PairStatistics> statistics;
  EvalScope scope = EvalScope::test;

  /// Channel-averaged metric for one kernel at one distance.
  double mean_over_channels(const std::string& kernel, double distance, bool f1 = false) const {
    double acc = 0.0;
    int n = 0;
    for (const auto& c : cells) {
      if (c.key.kernel == kernel && std::abs(c.key.distance_m - distance) < 1e-9) {
        acc += f1 ? c.report.f1 : c.report.accuracy;
        ++n;
      }
    }
    detail::require(n > 0, Errc::invalid_argument, "no cells for kernel " + kernel);
    return acc / n;
  }
};

inline CellResult evaluate_cell(const TrainedCell& trained, const FeatureTable& table,
                                const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = cell_rows(table, trained.key.distance_m, trained.key.channel);
  const auto train_set = training_vectors(rows);
  const auto eval = evaluation_rows(rows, cfg.scope);
  detail::require(!eval.empty(), Errc::too_few_samples, "no evaluation rows for " + trained.key.tag());

  const auto xs = vectors_of(eval);
  const auto preds = trained.detector.predict(xs);
  std::vector<SceneLabel> conds;
  std::vector<int> labels;
  for (const auto* r : eval) {
    conds.push_back(r->label());
    labels.push_back(r->label().is_normal() ? kNormal : kAnomaly);
  }

  CellResult out;
  out.key = trained.key;
  out.report = metrics_by_condition(preds, conds, PositiveClass::anomaly);
  out.confusion = confusion(preds, labels, PositiveClass::anomaly);
  out.f1_normal_positive = metrics(flip_positive(out.confusion)).f1;
  out.sweep = feature_sweep(train_set, xs, labels, trained.detector.model.kernel_config, cfg.ocsvm);
  if (int(trained.quadrant_standardizer.dim()) >= 4) {
    for (std::size_t i = 0; i < eval.size(); ++i) {
      const auto z = trained.quadrant_standardizer.transform(xs[i].values);
      out.scatter.push_back({z[2], z[3], conds[i], preds[i]});
    }
  }
  out.hyperparameters = {{"kernel", trained.detector.model.kernel_config},
                         {"ocsvm", trained.detector.model.config},
                         {"ar_order", cfg.ar_order},
                         {"n_train", trained.detector.training.size()},
                         {"n_support", trained.detector.model.support_indices.size()}};
  out.wall_time_s = trained.wall_time_s +
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

inline std::vector<PairStatistics> compare_kernels(const RunResult& r, const ExperimentConfig& cfg) {
  std::vector<PairStatistics> out;
  for (std::size_t i = 0; i < cfg.kernels.size(); ++i) {
    for (std::size_t k = i + 1; k < cfg.kernels.size(); ++k) {
      for (bool f1 : {false, true}) {
        PairStatistics s;
        s.metric = f1 ? "f1" : "accuracy";
        s.kernel_a = cfg.kernels[i].name;
        s.kernel_b = cfg.kernels[k].name;
        for (double d : cfg.distances) {
          s.a.push_back(r.mean_over_channels(s.kernel_a, d, f1));
          s.b.push_back(r.mean_over_channels(s.kernel_b, d, f1));
        }
        try {
          s.t_test = paired_t_test(s.a, s.b);
        } catch (const Error& e) {
          s.note = std::string("t-test: ") + e.what();
        }
        try {
          s.cohens_d = cohens_d(s.a, s.b);
        } catch (const Error& e) {
          s.note += (s.note.empty() ? "" : "; ") + std::string("cohens_d: ") + e.what();
        }
        out.push_back(std::move(s));
      }
    }
  }
  return out;
}

inline RunResult evaluate_all(const std::vector<TrainedCell>& cells, const FeatureTable& table,
                              const ExperimentConfig& cfg) {
  RunResult r;
  r.scope = cfg.scope;
  for (const auto& c : cells) r.cells.push_back(evaluate_cell(c, table, cfg));
  r.statistics = compare_kernels(r, cfg);
  return r;
}

inline json confusion_json(const ConfusionMatrix& cm) {
  return {{"tp", cm.tp}, {"fn", cm.fn}, {"fp", cm.fp}, {"tn", cm.tn},
          {"positive_class", to_string(cm.positive_class)}};
}

inline json run_result_to_json(const RunResult& r, const ExperimentConfig& cfg) {
  json cells = json::array();
  for (const auto& c : r.cells) {
    json per_condition = json::object();
    for (const auto& [name, cm] : c.report.per_condition) {
      per_condition[name] = confusion_json(cm);
      per_condition[name]["accuracy"] = metrics(cm).accuracy;
    }
    cells.push_back({{"distance_m", c.key.distance_m},
                     {"channel", c.key.channel},
                     {"kernel", c.key.kernel},
                     {"accuracy", c.report.accuracy},
                     {"precision", c.report.precision},
                     {"recall", c.report.recall},
                     {"f1", c.report.f1},
                     {"f1_normal_positive", c.f1_normal_positive},
                     {"confusion", confusion_json(c.confusion)},
                     {"per_condition", per_condition},
                     {"hyperparameters", c.hyperparameters},
                     {"wall_time_s", c.wall_time_s}});
  }
  json stats = json::array();
  for (const auto& s : r.statistics) {
    json j{{"metric", s.metric},
           {"kernel_a", s.kernel_a},
           {"kernel_b", s.kernel_b},
           {"per_distance_a", s.a},
           {"per_distance_b", s.b},
           {"convention",
            "paired t-test on channel-averaged per-distance values (d_i = a_i - b_i, sample sd); "
            "Cohen's d = (mean a - mean b) / sqrt((s_a^2 + s_b^2) / 2)"}};
    if (s.t_test) {
      j["t"] = s.t_test->t;
      j["df"] = s.t_test->df;
      j["p"] = s.t_test->p;
    }
    if (s.cohens_d) j["cohens_d"] = *s.cohens_d;
    if (!s.note.empty()) j["note"] = s.note;
    stats.push_back(j);
  }
  return detail::round_floats(json{{"positive_class", "anomaly"},
                                   {"scope", to_string(r.scope)},
                                   {"effective_config", config_to_json(cfg)},
                                   {"cells", cells},
                                   {"statistics", stats}});
}

inline std::string table_csv(const RunResult& r) {
  std::string out = "distance,channel,kernel,accuracy,f1,tp,fn,fp,tn\n";
  for (const auto& c : r.cells) {
    out += format_g6(c.key.distance_m) + "," + c.key.channel + "," + c.key.kernel + "," +
           format_g6(c.report.accuracy) + "," + format_g6(c.report.f1) + "," +
           std::to_string(c.confusion.tp) + "," + std::to_string(c.confusion.fn) + "," +
           std::to_string(c.confusion.fp) + "," + std::to_string(c.confusion.tn) + "\n";
  }
  return out;
}

inline std::string sweep_csv(const RunResult& r) {
  std::string out = "distance,channel,kernel,k,accuracy,f1\n";
  for (const auto& c : r.cells) {
    for (const auto& s : c.sweep) {
      out += format_g6(c.key.distance_m) + "," + c.key.channel + "," + c.key.kernel + "," +
             std::to_string(s.k) + "," + format_g6(s.accuracy) + "," + format_g6(s.f1) + "\n";
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct DatasetPaths {
  fs::path root;
  fs::path manifest() const { return root / "manifest.json"; }
};

inline void write_effective_config(const ExperimentConfig& cfg) {
  detail::write_text(fs::path(cfg.output_dir) / "effective_config.json",
                     config_to_json(cfg).dump(2) + "\n");
}

struct SynthSummary {
  std::map<std::string, int> per_condition;  // per (distance, channel) cell
  int train = 0;
  int test = 0;
  int files = 0;
};

/// Writes one WAV per recording and a manifest mapping file -> labels/split.
inline SynthSummary cmd_synth(const ExperimentConfig& cfg, const fs::path& dataset_dir) {
  fs::create_directories(dataset_dir / "audio");
  json samples = json::array();
  SynthSummary summary;
  for_each_recording(cfg, [&](const SampleInfo& info, auto&& render) {
    const fs::path rel = fs::path("audio") / (info.id + ".wav");
    write_wav(dataset_dir / rel, render());
    samples.push_back({{"file", rel.generic_string()},
                       {"sample_id", info.id},
                       {"con_state", info.label.con_state},
                       {"cha_state", info.label.cha_state},
                       {"distance_m", info.distance_m},
                       {"channel", info.channel},
                       {"split", to_string(info.split)}});
    ++summary.files;
  });
  // Counts are per (distance, channel) cell.
  const auto& d = cfg.dataset;
  summary.per_condition = {{"0/0", d.normal}, {"0/1", d.cha_only}, {"1/0", d.con_only}, {"1/1", d.both}};
  summary.train = d.train_normals;
  summary.test = d.total() - d.train_normals;

  json manifest{{"sample_rate_hz", cfg.sample_rate_hz},
                {"window", cfg.window},
                {"seed", cfg.seed},
                {"per_cell_counts",
                 {{"conditions", summary.per_condition},
                  {"train", summary.train},
                  {"test", summary.test},
                  {"total", d.total()}}},
                {"distances", cfg.distances},
                {"channels", [&] {
                   json names = json::array();
                   for (const auto& c : cfg.channels) names.push_back(c.name);
                   return names;
                 }()},
                {"samples", samples}};
  detail::write_text(dataset_dir / "manifest.json", manifest.dump(1) + "\n");
  return summary;
}

/// Reads the manifest, extracts AR features of every segment. Missing or
/// unreadable files are collected and reported together.
inline FeatureTable cmd_features(const ExperimentConfig& cfg, const fs::path& dataset_dir) {
  const json manifest = detail::read_json(dataset_dir / "manifest.json");
  FeatureTable table;
  std::vector<std::string> failures;
  for (const auto& s : manifest.at("samples")) {
    SampleInfo info;
    info.id = s.at("sample_id").get<std::string>();
    info.label = {s.at("con_state").get<int>(), s.at("cha_state").get<int>()};
    info.distance_m = s.at("distance_m").get<double>();
    info.channel = s.at("channel").get<std::string>();
    info.split = parse_split(s.at("split").get<std::string>());
    const fs::path file = dataset_dir / s.at("file").get<std::string>();
    try {
      append_features(table, info, load_wav(file), cfg);
    } catch (const Error& e) {
      failures.push_back(file.string() + " (" + e.what() + ")");
    }
  }
  if (!failures.empty()) {
    std::string msg = std::to_string(failures.size()) + " unreadable file(s):";
    for (const auto& f : failures) msg += "\n  " + f;
    throw Error(Errc::malformed_file, msg);
  }
  return table;
}

inline std::vector<TrainedCell> cmd_train(const ExperimentConfig& cfg, const FeatureTable& table,
                                          const fs::path& models_dir) {
  auto cells = train_all(table, cfg);
  fs::create_directories(models_dir);
  for (const auto& c : cells) {
    detail::write_text(models_dir / (c.key.tag() + ".json"), trained_cell_to_json(c).dump() + "\n");
  }
  return cells;
}

/// Loads every configured cell's model and checks it against the features.
inline std::vector<TrainedCell> load_models(const ExperimentConfig& cfg, const FeatureTable& table,
                                            const fs::path& models_dir) {
  std::vector<TrainedCell> cells;
  for (double d : cfg.distances) {
    for (const auto& ch : cfg.channels) {
      const auto train_set = training_vectors(cell_rows(table, d, ch.name));
      detail::require(!train_set.empty(), Errc::too_few_samples,
                      "no training rows for " + detail::distance_tag(d) + "_" + ch.name);
      const auto stats = fit_standardizer(train_set);
      for (const auto& k : cfg.kernels) {
        const CellKey key{d, ch.name, k.name};
        auto cell = trained_cell_from_json(detail::read_json(models_dir / (key.tag() + ".json")));
        detail::require(cell.config_hash == cell_hash(stats, k, cfg), Errc::config_mismatch,
                        "model " + key.tag() + " does not match features/config");
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

inline RunResult cmd_eval(const ExperimentConfig& cfg, const FeatureTable& table,
                          const fs::path& models_dir, const fs::path& eval_dir) {
  const auto cells = load_models(cfg, table, models_dir);
  RunResult r = evaluate_all(cells, table, cfg);
  detail::write_text(eval_dir / "results.json", run_result_to_json(r, cfg).dump(2) + "\n");
  detail::write_text(eval_dir / "table.csv", table_csv(r));
  detail::write_text(eval_dir / "sweep.csv", sweep_csv(r));
  fs::create_directories(eval_dir / "scatter");
  for (const auto& c : r.cells) {
    scatter_export(c.scatter, eval_dir / "scatter" / (c.key.tag() + ".csv"));
  }
  return r;
}

struct CheckOutcome {
  bool passed = true;
  std::vector<std::string> lines;
};

/// Directional properties of the synthetic benchmark: the quantum kernel keeps
/// accuracy >= 0.90 at every distance and is not worse than RBF at the largest one.
inline CheckOutcome check_properties(const RunResult& r, const ExperimentConfig& cfg,
                                     const std::string& quantum = "quantum",
                                     const std::string& rbf = "rbf") {
  CheckOutcome out;
  const bool has_q = std::any_of(cfg.kernels.begin(), cfg.kernels.end(),
                                 [&](const auto& k) { return k.name == quantum; });
  const bool has_r = std::any_of(cfg.kernels.begin(), cfg.kernels.end(),
                                 [&](const auto& k) { return k.name == rbf; });
  if (!has_q) {
    out.lines.push_back("skip: no kernel named '" + quantum + "'");
    return out;
  }
  for (double d : cfg.distances) {
    const double acc = r.mean_over_channels(quantum, d);
    const bool ok = acc >= 0.90;
    out.passed = out.passed && ok;
    out.lines.push_back(std::string(ok ? "PASS" : "FAIL") + " quantum accuracy at " +
                        format_g6(d) + " m = " + format_g6(acc) + " (>= 0.90)");
  }
  if (has_r) {
    const double dmax = *std::max_element(cfg.distances.begin(), cfg.distances.end());
    const double q = r.mean_over_channels(quantum, dmax);
    const double c = r.mean_over_channels(rbf, dmax);
    const bool ok = q >= c;
    out.passed = out.passed && ok;
    out.lines.push_back(std::string(ok ? "PASS" : "FAIL") + " quantum " + format_g6(q) +
                        " >= rbf " + format_g6(c) + " at " + format_g6(dmax) + " m");
  }
  return out;
}

}  // namespace qkad
