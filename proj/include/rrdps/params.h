#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rrdps {

enum class Detector { kPhotonNumberResolving, kThreshold };

std::string_view to_string(Detector detector);
Detector parse_detector(std::string_view text);

// Raised when a parameter violates its documented range. `field()` names the
// offending parameter so front ends can report it.
class ParamError : public std::invalid_argument {
 public:
  ParamError(std::string field, const std::string& message);
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Physical and protocol parameters of the slow-basis RRDPS setup.
//
// A block is `block_size` pulses, a sequence is `blocks_per_sequence` blocks
// sharing one measurement setting. `init_pulses` is the number of source
// pulses emitted (and discarded) while devices re-initialize after each
// sequence; it only enters the per-pulse normalization of the key rate.
struct ProtocolParams {
  int block_size = 128;                   // L
  std::int64_t blocks_per_sequence = 1;   // M
  double mean_photons = 0.0;              // mu, per pulse
  int photon_threshold = 0;               // nu_th
  double transmission = 1.0;              // eta
  double system_error = 0.03;             // e_sys
  double dark_count = 1e-9;               // d_c, per detection slot
  std::int64_t init_pulses = 0;           // c_d
  Detector detector = Detector::kPhotonNumberResolving;
  double pulse_interval = 1e-9;           // T [s], metadata only

  // Throws ParamError on the first violated invariant.
  void validate() const;
};

}  // namespace rrdps
