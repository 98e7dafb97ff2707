#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qkad {

enum class Errc {
  missing_file,
  not_pcm,
  unsupported_format,
  empty_audio,
  malformed_file,
  window_too_long,
  degenerate_series,
  singular_system,
  dimension_mismatch,
  out_of_range,
  invalid_argument,
  non_finite,
  psd_violation,
  too_few_samples,
  io_failure,
  config_mismatch,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::missing_file: return "missing file";
    case Errc::not_pcm: return "non-PCM encoding";
    case Errc::unsupported_format: return "unsupported format";
    case Errc::empty_audio: return "empty audio";
    case Errc::malformed_file: return "malformed file";
    case Errc::window_too_long: return "window longer than series";
    case Errc::degenerate_series: return "degenerate";
    case Errc::singular_system: return "singular system";
    case Errc::dimension_mismatch: return "dimension mismatch";
    case Errc::out_of_range: return "index out of range";
    case Errc::invalid_argument: return "invalid argument";
    case Errc::non_finite: return "non-finite value";
    case Errc::psd_violation: return "PSD violation";
    case Errc::too_few_samples: return "too few samples";
    case Errc::io_failure: return "I/O failure";
    case Errc::config_mismatch: return "config mismatch";
  }
  return "unknown";
}

/// Single exception type for the library; the code distinguishes failure kinds.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + (detail.empty() ? "" : ": " + detail)),
        code_(code) {}
  explicit Error(Errc code) : Error(code, "") {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

namespace detail {
inline void require(bool condition, Errc code, std::string_view detail = {}) {
  if (!condition) throw Error(code, std::string(detail));
}
}  // namespace detail

}  // namespace qkad
