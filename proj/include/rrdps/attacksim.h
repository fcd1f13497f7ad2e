#pragma once

#include <cstdint>
#include <map>

namespace rrdps {

// Intercept-resend attack on BB84 with per-sequence basis choice at Bob.
// Eve stores `measured + clean` whole sequences, measures the first kind in
// Z and resends, forwards the second kind untouched and blocks the rest.
struct AttackScenario {
  double p_z = 0.99;                 // P(Z) for Bob per sequence and Alice per pulse
  std::int64_t pulses_per_sequence = 100;
  std::int64_t sequences = 10'000;
  std::int64_t measured = 99;
  std::int64_t clean = 1;
  double eta_nominal = 1e-2;

  // Throws ParamError unless the forwarded pulse count equals the honest
  // expectation round(sequences * M * eta_nominal).
  void validate() const;
};

struct AttackStats {
  std::int64_t trials = 0;
  std::int64_t successes = 0;  // Bob's bases matched Eve's pattern
  std::int64_t detections = 0;
  std::int64_t sifted_naive = 0;
  std::int64_t sifted_modified = 0;
  double sifted_naive_sq = 0.0;
  double sifted_modified_sq = 0.0;
  std::int64_t max_sifted_modified = 0;
  // Within successful trials: sifted-key bit errors, and sifted bits from
  // measured sequences that Eve's record got wrong. Both stay zero.
  std::int64_t success_bit_errors = 0;
  std::int64_t success_eve_mismatches = 0;
  std::int64_t success_sifted_bits = 0;
  std::map<std::int64_t, std::int64_t> clicks_histogram;  // detections per sequence

  void merge(const AttackStats& other);
  double success_rate() const;
  double success_stderr() const;
  double mean_sifted_naive() const;
  double mean_sifted_modified() const;
  double stderr_sifted_naive() const;
  double stderr_sifted_modified() const;
};

// p_z^measured * (1 - p_z)^clean.
double analytic_success(const AttackScenario& scenario);

AttackStats run_attack(const AttackScenario& scenario, std::int64_t trials, std::uint64_t seed);

// No eavesdropper: single-photon source, every pulse detected independently
// with probability eta, Alice's basis per pulse and Bob's per sequence.
AttackStats honest_baseline(double p_z, std::int64_t pulses_per_sequence, std::int64_t sequences, double eta,
                            std::uint64_t seed, std::int64_t trials = 1);

}  // namespace rrdps
