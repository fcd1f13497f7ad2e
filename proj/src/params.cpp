#include "rrdps/params.h"

#include <cmath>

#include <fmt/format.h>

namespace rrdps {

std::string_view to_string(Detector detector) {
  switch (detector) {
    case Detector::kPhotonNumberResolving:
      return "pnr";
    case Detector::kThreshold:
      return "threshold";
  }
  return "unknown";
}

Detector parse_detector(std::string_view text) {
  if (text == "pnr") return Detector::kPhotonNumberResolving;
  if (text == "threshold") return Detector::kThreshold;
  throw ParamError("detector", fmt::format("unknown detector model '{}' (expected pnr or threshold)", text));
}

ParamError::ParamError(std::string field, const std::string& message)
    : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}

namespace {

void require_probability(const char* field, double value) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw ParamError(field, fmt::format("must lie in [0, 1], got {}", value));
  }
}

}  // namespace

void ProtocolParams::validate() const {
  if (block_size < 2) {
    throw ParamError("L", fmt::format("block size must be at least 2, got {}", block_size));
  }
  if (blocks_per_sequence < 1) {
    throw ParamError("M", fmt::format("sequence length must be at least 1, got {}", blocks_per_sequence));
  }
  if (!(mean_photons >= 0.0) || !std::isfinite(mean_photons)) {
    throw ParamError("mu", fmt::format("mean photon number must be finite and nonnegative, got {}", mean_photons));
  }
  if (photon_threshold < 0 || photon_threshold > block_size - 1) {
    throw ParamError("nu_th",
                     fmt::format("photon threshold must lie in [0, L-1] = [0, {}], got {}", block_size - 1,
                                 photon_threshold));
  }
  require_probability("eta", transmission);
  require_probability("e_sys", system_error);
  require_probability("d_c", dark_count);
  if (init_pulses < 0) {
    throw ParamError("c_d", fmt::format("initialization pulse count must be nonnegative, got {}", init_pulses));
  }
  if (!(pulse_interval > 0.0)) {
    throw ParamError("T", fmt::format("pulse interval must be positive, got {}", pulse_interval));
  }
}

}  // namespace rrdps
