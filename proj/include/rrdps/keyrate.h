#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "rrdps/params.h"

namespace rrdps {

// Why a key rate came out as zero without being computed from the entropy
// bound. kOk means G_raw was evaluated from the formula (it may still be
// negative, in which case the clamped rate is 0).
enum class RateStatus { kOk, kNoDetections, kNoValidBound };

std::string_view to_string(RateStatus status);

struct KeyRateResult {
  double key_rate = 0.0;            // max(G_raw, 0), per emitted pulse
  double key_rate_raw = 0.0;        // G before clamping
  double detection_rate = 0.0;      // Q, per sequence
  double bit_error = 0.0;           // e_bit
  double phase_error = 0.0;         // e_ph (NaN when no valid bound exists)
  double sequence_tag = 0.0;        // e_src,slow
  double double_count_bound = 0.0;  // e_mB, zero for PNR detectors
  RateStatus status = RateStatus::kOk;
};

// Per-sequence observables of the channel model, before any entropy terms.
struct SequenceRates {
  double detection_rate = 0.0;
  double bit_error = 0.0;
  double sequence_tag = 0.0;
  double double_count_bound = 0.0;
};

// h(x) = -x log2 x - (1-x) log2 (1-x) with 0 log 0 = 0. Throws
// std::domain_error outside [0, 1].
double binary_entropy(double x);

// Probability that a block of `block_size` coherent pulses of mean
// `mean_photons` carries more than `photon_threshold` photons, i.e. the
// upper tail P(N > nu_th) of N ~ Poisson(L mu).
//
// Terms are generated by the ratio recurrence p_k = p_{k-1} lambda / k from a
// log-space starting point and accumulated with compensated summation. The
// tail is summed directly when nu_th >= lambda and as the complement of the
// lower sum otherwise, so the result keeps ~1e-12 relative accuracy in both
// the tiny-tail and bulk regimes.
double block_tag_probability(int block_size, double mean_photons, int photon_threshold);

// 1 - (1 - e_src)^M, evaluated as -expm1(M log1p(-e_src)).
double sequence_tag_probability(double block_tag, std::int64_t blocks_per_sequence);

// sum_{m=0}^{M-1} r^m given log r <= 0, in closed form. Exact M when r = 1.
double geometric_sum_from_log(double log_ratio, std::int64_t terms);

// Log of the per-block "nothing happened" factor exp(-L eta mu) (1-d_c)^{2L}.
double log_idle_block_probability(const ProtocolParams& p);

// Q: detection rate per sequence.
double detection_rate(const ProtocolParams& p);

// e_bit. Throws std::domain_error when the detection rate is zero.
double bit_error_rate(const ProtocolParams& p);

// e_mB: eight times the per-sequence double-count rate. Zero for PNR.
double double_count_bound(const ProtocolParams& p);

// Phase error bound for photon-number-resolving detectors. std::nullopt when
// the tagged fraction exceeds the detection rate (no valid bound). Throws
// std::domain_error if Q <= 0.
std::optional<double> phase_error_pnr(double sequence_tag, double detection_rate, int photon_threshold,
                                      int block_size);

// Phase error bound for threshold detectors: Q is replaced by Q - e_mB.
// std::nullopt when Q <= e_mB or the tagged fraction exceeds Q - e_mB.
std::optional<double> phase_error_threshold(double sequence_tag, double detection_rate,
                                            double double_count_bound, int photon_threshold, int block_size);

// G for PNR detectors given already-evaluated error rates.
double key_rate_pnr(double detection_rate, double bit_error, double phase_error, double pulses_per_sequence);

// G for threshold detectors given already-evaluated error rates.
double key_rate_threshold(double detection_rate, double bit_error, double phase_error, double double_count_bound,
                          double pulses_per_sequence);

SequenceRates sequence_rates(const ProtocolParams& p);

// Assembles the key rate from precomputed sequence observables. Exposed so
// callers can substitute individual rates (e.g. a measured e_mB).
KeyRateResult key_rate_from_rates(const SequenceRates& rates, Detector detector, int block_size,
                                  std::int64_t blocks_per_sequence, std::int64_t init_pulses, int photon_threshold);

KeyRateResult key_rate(const ProtocolParams& p);

}  // namespace rrdps
