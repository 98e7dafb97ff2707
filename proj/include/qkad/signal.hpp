#pragma once

// Audio ingestion, synthetic two-machine scene generation, segmentation and
// sound-pressure measurement.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qkad/error.hpp"

namespace qkad {

/// Uniformly sampled mono segment. Samples are dimensionless, nominally in [-1, 1].
class TimeSeries {
 public:
  TimeSeries(std::vector<double> samples, int sample_rate_hz)
      : samples_(std::move(samples)), sample_rate_hz_(sample_rate_hz) {
    detail::require(!samples_.empty(), Errc::invalid_argument, "time series must be non-empty");
    detail::require(sample_rate_hz_ > 0, Errc::invalid_argument, "sample rate must be positive");
    for (double s : samples_) detail::require(std::isfinite(s), Errc::non_finite, "sample");
  }

  std::span<const double> samples() const noexcept { return samples_; }
  std::size_t size() const noexcept { return samples_.size(); }
  int sample_rate_hz() const noexcept { return sample_rate_hz_; }
  double duration_s() const noexcept { return double(samples_.size()) / sample_rate_hz_; }

  friend bool operator==(const TimeSeries&, const TimeSeries&) = default;

 private:
  std::vector<double> samples_;
  int sample_rate_hz_;
};

// ---------------------------------------------------------------------------
// WAV I/O
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint32_t read_le32(const unsigned char* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
         (std::uint32_t(p[3]) << 24);
}
inline std::uint16_t read_le16(const unsigned char* p) {
  return std::uint16_t(p[0] | (p[1] << 8));
}
inline void put_le32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xff);
}
inline void put_le16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(v & 0xff);
  out.push_back((v >> 8) & 0xff);
}

}  // namespace detail

/// Parses a RIFF/WAVE PCM 16-bit buffer. Multi-channel data yields channel 0.
inline TimeSeries parse_wav(std::span<const unsigned char> bytes) {
  using detail::read_le16;
  using detail::read_le32;
  detail::require(bytes.size() >= 12, Errc::malformed_file, "truncated RIFF header");
  detail::require(std::equal(bytes.begin(), bytes.begin() + 4, "RIFF") &&
                      std::equal(bytes.begin() + 8, bytes.begin() + 12, "WAVE"),
                  Errc::malformed_file, "not a RIFF/WAVE container");

  bool have_fmt = false;
  std::uint16_t channels = 0;
  std::uint16_t bits = 0;
  std::uint32_t rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* hdr = bytes.data() + pos;
    const std::uint32_t chunk_size = read_le32(hdr + 4);
    const std::size_t body = pos + 8;
    detail::require(body + chunk_size <= bytes.size(), Errc::malformed_file, "chunk overruns file");

    if (std::equal(hdr, hdr + 4, "fmt ")) {
      detail::require(chunk_size >= 16, Errc::malformed_file, "short fmt chunk");
      const unsigned char* f = bytes.data() + body;
      std::uint16_t format = read_le16(f);
      if (format == 0xFFFE && chunk_size >= 26) format = read_le16(f + 24);  // extensible
      detail::require(format == 1, Errc::not_pcm, "format tag " + std::to_string(format));
      channels = read_le16(f + 2);
      rate = read_le32(f + 4);
      bits = read_le16(f + 14);
      detail::require(bits == 16, Errc::unsupported_format,
                      std::to_string(bits) + "-bit samples (16-bit required)");
      detail::require(channels >= 1 && rate > 0, Errc::malformed_file, "bad fmt fields");
      have_fmt = true;
    } else if (std::equal(hdr, hdr + 4, "data")) {
      detail::require(have_fmt, Errc::malformed_file, "data chunk before fmt chunk");
      const std::size_t frame = 2u * channels;
      const std::size_t frames = chunk_size / frame;
      detail::require(frames > 0, Errc::empty_audio);
      std::vector<double> samples(frames);
      const unsigned char* d = bytes.data() + body;
      for (std::size_t i = 0; i < frames; ++i) {
        samples[i] = static_cast<std::int16_t>(read_le16(d + i * frame)) / 32768.0;
      }
      return TimeSeries(std::move(samples), static_cast<int>(rate));
    }
    pos = body + chunk_size + (chunk_size & 1u);
  }
  detail::require(have_fmt, Errc::malformed_file, "missing fmt chunk");
  throw Error(Errc::malformed_file, "missing data chunk");
}

inline TimeSeries load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::missing_file, path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return parse_wav(bytes);
}

/// Encodes channel-interleaved 16-bit PCM. Values are clipped to the int16 range.
inline std::vector<unsigned char> encode_wav(std::span<const double> interleaved, int channels,
                                             int sample_rate_hz) {
  using detail::put_le16;
  using detail::put_le32;
  const auto data_bytes = static_cast<std::uint32_t>(interleaved.size() * 2);
  std::vector<unsigned char> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_le32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_le32(out, 16);
  put_le16(out, 1);
  put_le16(out, static_cast<std::uint16_t>(channels));
  put_le32(out, static_cast<std::uint32_t>(sample_rate_hz));
  put_le32(out, static_cast<std::uint32_t>(sample_rate_hz * channels * 2));
  put_le16(out, static_cast<std::uint16_t>(channels * 2));
  put_le16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_le32(out, data_bytes);
  for (double v : interleaved) {
    const double scaled = std::round(v * 32768.0);
    const auto q = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    put_le16(out, static_cast<std::uint16_t>(q));
  }
  return out;
}

inline void write_wav(const std::filesystem::path& path, const TimeSeries& ts) {
  const auto bytes = encode_wav(ts.samples(), 1, ts.sample_rate_hz());
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!out) throw Error(Errc::io_failure, path.string());
}

// ---------------------------------------------------------------------------
// Level measurement and segmentation
// ---------------------------------------------------------------------------

/// Level reported for all-zero input.
inline constexpr double kSilenceDb = -200.0;

/// SPL-scale level that maps to digital full scale (rms 1.0). Machine and noise
/// levels are given on the SPL scale and converted with this offset.
inline constexpr double kFullScaleSplDb = 70.0;

inline double rms(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return x.empty() ? 0.0 : std::sqrt(acc / double(x.size()));
}

/// 20*log10(rms) relative to full scale; kSilenceDb for silence.
inline double spl_db(const TimeSeries& ts) {
  const double r = rms(ts.samples());
  if (r <= 0.0) return kSilenceDb;
  return std::max(kSilenceDb, 20.0 * std::log10(r));
}

inline std::vector<TimeSeries> segment(const TimeSeries& ts, std::size_t window_len,
                                       std::size_t hop) {
  detail::require(window_len > 0 && hop > 0, Errc::invalid_argument, "window and hop must be positive");
  detail::require(window_len <= ts.size(), Errc::window_too_long,
                  std::to_string(window_len) + " > " + std::to_string(ts.size()));
  const std::size_t count = (ts.size() - window_len) / hop + 1;
  std::vector<TimeSeries> out;
  out.reserve(count);
  auto s = ts.samples();
  for (std::size_t k = 0; k < count; ++k) {
    auto first = s.begin() + std::ptrdiff_t(k * hop);
    out.emplace_back(std::vector<double>(first, first + std::ptrdiff_t(window_len)),
                     ts.sample_rate_hz());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scene synthesis
// ---------------------------------------------------------------------------

enum class MachineId { CON, CHA };

inline constexpr std::string_view to_string(MachineId id) noexcept {
  return id == MachineId::CON ? "CON" : "CHA";
}

/// Tonal signature of one machine plus the ringing of its nail-strike transients.
struct MachineSpec {
  MachineId machine_id = MachineId::CON;
  double base_freq_hz = 100.0;
  std::vector<double> harmonic_gains{1.0};
  double base_spl_db = 40.0;  // at 0 m, SPL scale
  double click_ring_hz = 2000.0;
  double click_gain_db = 12.0;     // transient peak relative to the machine's tonal rms
  double click_broadband = 0.5;    // weight of the white part of a transient

  void validate() const {
    detail::require(base_freq_hz > 0.0, Errc::invalid_argument, "base_freq_hz must be positive");
    detail::require(!harmonic_gains.empty(), Errc::invalid_argument, "harmonic_gains empty");
    detail::require(base_spl_db >= 20.0 && base_spl_db <= 100.0, Errc::invalid_argument,
                    "base_spl_db outside [20, 100]");
    detail::require(click_ring_hz > 0.0, Errc::invalid_argument, "click_ring_hz must be positive");
  }
};

inline MachineSpec default_conveyor() {
  return {MachineId::CON, 180.0, {1.0, 0.6, 0.4, 0.25}, 43.7, 2600.0, 12.0, 0.5};
}
inline MachineSpec default_chain_belt() {
  return {MachineId::CHA, 310.0, {1.0, 0.5, 0.5, 0.3, 0.2}, 41.2, 5600.0, 12.0, 0.5};
}

/// Piecewise-linear attenuation in dB versus distance; clamped outside the table.
struct AttenuationTable {
  std::vector<std::pair<double, double>> points{{0.0, 0.0}, {1.0, -2.0}, {2.0, -3.5}, {3.0, -4.0}};

  double at(double distance_m) const {
    if (points.empty()) return 0.0;
    if (distance_m <= points.front().first) return points.front().second;
    for (std::size_t i = 1; i < points.size(); ++i) {
      if (distance_m <= points[i].first) {
        const auto [d0, a0] = points[i - 1];
        const auto [d1, a1] = points[i];
        return a0 + (a1 - a0) * (distance_m - d0) / (d1 - d0);
      }
    }
    return points.back().second;
  }
};

struct SceneConfig {
  int con_state = 0;  // 0 normal, 1 anomalous
  int cha_state = 0;
  double distance_m = 0.0;
  double noise_floor_db = 36.0;  // SPL scale; -inf or <= kSilenceDb disables
  double anomaly_impulse_rate_hz = 40.0;
  std::uint64_t seed = 0;
  int sample_rate_hz = 16000;
  double click_decay_s = 0.005;
  double con_gain_db = 0.0;  // channel pickup offsets
  double cha_gain_db = 0.0;
  AttenuationTable attenuation{};

  void validate() const {
    detail::require((con_state == 0 || con_state == 1) && (cha_state == 0 || cha_state == 1),
                    Errc::invalid_argument, "machine states must be 0 or 1");
    detail::require(distance_m >= 0.0, Errc::invalid_argument, "distance must be non-negative");
    detail::require(anomaly_impulse_rate_hz >= 0.0, Errc::invalid_argument, "impulse rate < 0");
    detail::require(sample_rate_hz > 0, Errc::invalid_argument, "sample rate must be positive");
    detail::require(click_decay_s > 0.0, Errc::invalid_argument, "click decay must be positive");
  }
};

namespace detail {

inline double db_to_amplitude(double spl_db) {
  return std::pow(10.0, (spl_db - kFullScaleSplDb) / 20.0);
}

inline std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(stream),
                    std::uint32_t(0x9e3779b9u)};
  return std::mt19937_64(seq);
}

// Adds one machine's contribution (tonal signature, plus transients when anomalous).
inline void add_machine(std::vector<double>& out, const MachineSpec& spec, int state,
                        const SceneConfig& cfg, double level_offset_db, std::uint64_t stream) {
  const double gain_sq = [&] {
    double acc = 0.0;
    for (double g : spec.harmonic_gains) acc += g * g;
    return acc;
  }();
  if (gain_sq <= 0.0) return;  // silent machine

  auto rng = stream_rng(cfg.seed, stream);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double fs = cfg.sample_rate_hz;
  const double tonal_rms = std::sqrt(gain_sq / 2.0);
  const double amplitude =
      db_to_amplitude(spec.base_spl_db + level_offset_db + cfg.attenuation.at(cfg.distance_m)) /
      tonal_rms;

  // Small per-recording speed drift keeps normal recordings from being identical.
  const double f0 = spec.base_freq_hz * (1.0 + 0.01 * (unit(rng) - 0.5));
  // Each harmonic is a unit phasor advanced by complex rotation; Im(z) is the
  // sine. Drift over a recording stays far below PCM16 resolution.
  for (std::size_t h = 0; h < spec.harmonic_gains.size(); ++h) {
    const double phase = 2.0 * std::numbers::pi * unit(rng);
    const double step = 2.0 * std::numbers::pi * double(h + 1) * f0 / fs;
    const std::complex<double> w = std::polar(1.0, step);
    std::complex<double> z = std::polar(1.0, phase);
    const double g = amplitude * spec.harmonic_gains[h];
    double re = z.real(), im = z.imag();
    for (double& v : out) {
      v += g * im;
      const double r = re * w.real() - im * w.imag();
      im = re * w.imag() + im * w.real();
      re = r;
    }
  }

  if (state == 0 || cfg.anomaly_impulse_rate_hz <= 0.0) return;

  // Nail strikes: Poisson arrivals of exponentially decaying ringing clicks.
  const double peak = amplitude * tonal_rms * std::pow(10.0, spec.click_gain_db / 20.0);
  const double tau = cfg.click_decay_s * fs;  // in samples
  const auto span_len = static_cast<std::size_t>(std::ceil(8.0 * tau));
  std::exponential_distribution<double> gap(cfg.anomaly_impulse_rate_hz / fs);
  std::normal_distribution<double> white(0.0, 1.0);
  const double duration = double(out.size());
  const double decay = std::exp(-1.0 / tau);
  const std::complex<double> ring_step = std::polar(1.0, 2.0 * std::numbers::pi * spec.click_ring_hz / fs);
  for (double onset = gap(rng); onset < duration; onset += gap(rng)) {
    const double polarity = unit(rng) < 0.5 ? -1.0 : 1.0;
    const double ring_phase = 2.0 * std::numbers::pi * unit(rng);
    const auto start = static_cast<std::size_t>(onset);
    double env = 1.0;
    double re = std::cos(ring_phase), im = std::sin(ring_phase);
    for (std::size_t k = 0; k < span_len && start + k < out.size(); ++k) {
      out[start + k] += polarity * peak * env *
                        ((1.0 - spec.click_broadband) * im + spec.click_broadband * white(rng));
      env *= decay;
      const double r = re * ring_step.real() - im * ring_step.imag();
      im = re * ring_step.imag() + im * ring_step.real();
      re = r;
    }
  }
}

}  // namespace detail

/// Machine and noise waveforms of one scene before channel pickup offsets.
/// Every microphone of a recording hears the same components.
struct SceneComponents {
  std::vector<double> con, cha, noise;
};

inline SceneComponents render_components(const MachineSpec& con, const MachineSpec& cha,
                                         const SceneConfig& cfg, double duration_s) {
  detail::require(duration_s > 0.0, Errc::invalid_argument, "duration must be positive");
  con.validate();
  cha.validate();
  cfg.validate();
  const auto n = static_cast<std::size_t>(std::llround(duration_s * cfg.sample_rate_hz));
  detail::require(n >= 1, Errc::invalid_argument, "duration shorter than one sample");

  SceneComponents c{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0),
                    std::vector<double>(n, 0.0)};
  detail::add_machine(c.con, con, cfg.con_state, cfg, 0.0, 1);
  detail::add_machine(c.cha, cha, cfg.cha_state, cfg, 0.0, 2);
  if (std::isfinite(cfg.noise_floor_db) && cfg.noise_floor_db > kSilenceDb) {
    auto rng = detail::stream_rng(cfg.seed, 3);
    std::normal_distribution<double> white(0.0, detail::db_to_amplitude(cfg.noise_floor_db));
    for (double& v : c.noise) v = white(rng);
  }
  return c;
}

/// Applies the channel's pickup offsets (cfg.con_gain_db, cfg.cha_gain_db).
inline TimeSeries mix_channel(const SceneComponents& c, const SceneConfig& cfg) {
  const double a = std::pow(10.0, cfg.con_gain_db / 20.0);
  const double b = std::pow(10.0, cfg.cha_gain_db / 20.0);
  std::vector<double> out(c.noise.size());
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = a * c.con[t] + b * c.cha[t] + c.noise[t];
  return TimeSeries(std::move(out), cfg.sample_rate_hz);
}

/// Renders a single-channel scene: attenuated machine signatures, transients on
/// anomalous machines, and a distance-independent white noise floor. Each
/// component draws from its own seed-derived stream, so the same seed yields
/// the same tonal phases and noise regardless of machine states.
inline TimeSeries synthesize_scene(const MachineSpec& con, const MachineSpec& cha,
                                   const SceneConfig& cfg, double duration_s) {
  return mix_channel(render_components(con, cha, cfg, duration_s), cfg);
}

}  // namespace qkad
