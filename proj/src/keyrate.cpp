#include "rrdps/keyrate.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

namespace rrdps {

std::string_view to_string(RateStatus status) {
  switch (status) {
    case RateStatus::kOk:
      return "ok";
    case RateStatus::kNoDetections:
      return "no_detections";
    case RateStatus::kNoValidBound:
      return "no_valid_bound";
  }
  return "unknown";
}

double binary_entropy(double x) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw std::domain_error(fmt::format("binary_entropy: argument {} outside [0, 1]", x));
  }
  if (x == 0.0 || x == 1.0) return 0.0;
  return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

namespace {

// Neumaier's variant of Kahan summation.
class CompensatedSum {
 public:
  void add(double term) {
    const double t = sum_ + term;
    if (std::abs(sum_) >= std::abs(term)) {
      compensation_ += (sum_ - t) + term;
    } else {
      compensation_ += (term - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

double log_poisson_pmf(double lambda, int k) {
  return -lambda + k * std::log(lambda) - std::lgamma(static_cast<double>(k) + 1.0);
}

constexpr double kNegligible = 1e-18;

}  // namespace

double block_tag_probability(int block_size, double mean_photons, int photon_threshold) {
  if (block_size < 1) throw std::domain_error("block_tag_probability: block size must be >= 1");
  if (!(mean_photons >= 0.0)) throw std::domain_error("block_tag_probability: mean photon number must be >= 0");
  if (photon_threshold < 0) throw std::domain_error("block_tag_probability: threshold must be >= 0");

  const double lambda = block_size * mean_photons;
  if (lambda == 0.0) return 0.0;

  CompensatedSum sum;
  if (photon_threshold + 1 >= lambda) {
    // Upper tail: terms decrease monotonically from k = nu_th + 1. This also
    // covers nu_th = 0 with lambda << 1, where 1 - e^-lambda would cancel.
    int k = photon_threshold + 1;
    double term = std::exp(log_poisson_pmf(lambda, k));
    while (term > 0.0) {
      sum.add(term);
      ++k;
      term *= lambda / k;
      if (term < kNegligible * sum.value()) break;
    }
    return std::clamp(sum.value(), 0.0, 1.0);
  }

  // Lower sum: terms decrease monotonically going down from k = nu_th.
  int k = photon_threshold;
  double term = std::exp(log_poisson_pmf(lambda, k));
  while (term > 0.0) {
    sum.add(term);
    if (k == 0) break;
    term *= k / lambda;
    --k;
    if (term < kNegligible * sum.value()) break;
  }
  return std::clamp(1.0 - sum.value(), 0.0, 1.0);
}

double sequence_tag_probability(double block_tag, std::int64_t blocks_per_sequence) {
  if (!(block_tag >= 0.0 && block_tag <= 1.0)) {
    throw std::domain_error(fmt::format("sequence_tag_probability: block tag {} outside [0, 1]", block_tag));
  }
  if (blocks_per_sequence < 1) throw std::domain_error("sequence_tag_probability: M must be >= 1");
  if (block_tag == 1.0) return 1.0;
  return -std::expm1(static_cast<double>(blocks_per_sequence) * std::log1p(-block_tag));
}

double geometric_sum_from_log(double log_ratio, std::int64_t terms) {
  if (terms < 1) return 0.0;
  const double n = static_cast<double>(terms);
  if (log_ratio == 0.0) return n;
  if (std::isinf(log_ratio)) return 1.0;  // r = 0: only the m = 0 term survives
  return std::expm1(n * log_ratio) / std::expm1(log_ratio);
}

double log_idle_block_probability(const ProtocolParams& p) {
  const double arriving = p.block_size * p.transmission * p.mean_photons;
  return -arriving + 2.0 * p.block_size * std::log1p(-p.dark_count);
}

namespace {

struct BlockTerms {
  double signal_single;  // (1/2) L eta mu e^{-L eta mu}
  double dark;           // L d_c
  double arriving;       // L eta mu
};

BlockTerms block_terms(const ProtocolParams& p) {
  const double arriving = p.block_size * p.transmission * p.mean_photons;
  return {0.5 * arriving * std::exp(-arriving), p.block_size * p.dark_count, arriving};
}

double sequence_factor(const ProtocolParams& p) {
  return geometric_sum_from_log(log_idle_block_probability(p), p.blocks_per_sequence);
}

}  // namespace

double detection_rate(const ProtocolParams& p) {
  const BlockTerms t = block_terms(p);
  return sequence_factor(p) * (t.signal_single + t.dark);
}

double bit_error_rate(const ProtocolParams& p) {
  // The geometric prefactor is common to numerator and denominator.
  const BlockTerms t = block_terms(p);
  const double per_block = t.signal_single + t.dark;
  if (per_block <= 0.0 || sequence_factor(p) <= 0.0) {
    throw std::domain_error("bit_error_rate: detection rate is zero");
  }
  return (t.signal_single * p.system_error + 0.5 * t.dark) / per_block;
}

double double_count_bound(const ProtocolParams& p) {
  if (p.detector == Detector::kPhotonNumberResolving) return 0.0;
  const BlockTerms t = block_terms(p);
  const double L = p.block_size;
  const double per_block = t.arriving * t.arriving * std::exp(-t.arriving) / 16.0 +
                           t.signal_single * (2.0 * L - 1.0) * p.dark_count +
                           L * (2.0 * L - 1.0) * p.dark_count * p.dark_count;
  return 8.0 * sequence_factor(p) * per_block;
}

namespace {

std::optional<double> phase_error_from_fraction(double tagged_fraction, int photon_threshold, int block_size) {
  if (tagged_fraction > 1.0) return std::nullopt;
  const double threshold_term = static_cast<double>(photon_threshold) / (block_size - 1);
  return tagged_fraction + (1.0 - tagged_fraction) * threshold_term;
}

// Entropy charged for a phase-error bound. A bound at or above 1/2 carries no
// information, so it costs the full bit.
double phase_entropy(double phase_error) { return binary_entropy(std::min(phase_error, 0.5)); }

}  // namespace

std::optional<double> phase_error_pnr(double sequence_tag, double detection_rate, int photon_threshold,
                                      int block_size) {
  if (!(detection_rate > 0.0)) throw std::domain_error("phase_error_pnr: detection rate must be positive");
  if (block_size < 2) throw std::domain_error("phase_error_pnr: block size must be >= 2");
  return phase_error_from_fraction(sequence_tag / detection_rate, photon_threshold, block_size);
}

std::optional<double> phase_error_threshold(double sequence_tag, double detection_rate,
                                            double double_count_bound, int photon_threshold, int block_size) {
  if (block_size < 2) throw std::domain_error("phase_error_threshold: block size must be >= 2");
  const double single_photon_rate = detection_rate - double_count_bound;
  if (!(single_photon_rate > 0.0)) return std::nullopt;
  return phase_error_from_fraction(sequence_tag / single_photon_rate, photon_threshold, block_size);
}

double key_rate_pnr(double detection_rate, double bit_error, double phase_error, double pulses_per_sequence) {
  return detection_rate / pulses_per_sequence *
         (1.0 - binary_entropy(bit_error) - phase_entropy(phase_error));
}

double key_rate_threshold(double detection_rate, double bit_error, double phase_error, double double_count_bound,
                          double pulses_per_sequence) {
  const double multi_fraction = double_count_bound / detection_rate;
  return detection_rate / pulses_per_sequence *
         (1.0 - binary_entropy(bit_error) - multi_fraction - (1.0 - multi_fraction) * phase_entropy(phase_error));
}

SequenceRates sequence_rates(const ProtocolParams& p) {
  SequenceRates rates;
  rates.detection_rate = detection_rate(p);
  rates.bit_error = rates.detection_rate > 0.0 ? bit_error_rate(p) : std::numeric_limits<double>::quiet_NaN();
  rates.sequence_tag = sequence_tag_probability(block_tag_probability(p.block_size, p.mean_photons, p.photon_threshold),
                                                p.blocks_per_sequence);
  rates.double_count_bound = double_count_bound(p);
  return rates;
}

KeyRateResult key_rate_from_rates(const SequenceRates& rates, Detector detector, int block_size,
                                  std::int64_t blocks_per_sequence, std::int64_t init_pulses, int photon_threshold) {
  KeyRateResult r;
  r.detection_rate = rates.detection_rate;
  r.bit_error = rates.bit_error;
  r.sequence_tag = rates.sequence_tag;
  r.double_count_bound = detector == Detector::kThreshold ? rates.double_count_bound : 0.0;
  r.phase_error = std::numeric_limits<double>::quiet_NaN();

  if (!(rates.detection_rate > 0.0)) {
    r.status = RateStatus::kNoDetections;
    return r;
  }

  const std::optional<double> phase =
      detector == Detector::kThreshold
          ? phase_error_threshold(rates.sequence_tag, rates.detection_rate, r.double_count_bound, photon_threshold,
                                  block_size)
          : phase_error_pnr(rates.sequence_tag, rates.detection_rate, photon_threshold, block_size);
  if (!phase) {
    r.status = RateStatus::kNoValidBound;
    return r;
  }
  r.phase_error = *phase;

  const double pulses = static_cast<double>(blocks_per_sequence) * block_size + static_cast<double>(init_pulses);
  r.key_rate_raw = detector == Detector::kThreshold
                       ? key_rate_threshold(r.detection_rate, r.bit_error, r.phase_error, r.double_count_bound, pulses)
                       : key_rate_pnr(r.detection_rate, r.bit_error, r.phase_error, pulses);
  r.key_rate = std::max(r.key_rate_raw, 0.0);
  return r;
}

KeyRateResult key_rate(const ProtocolParams& p) {
  p.validate();
  return key_rate_from_rates(sequence_rates(p), p.detector, p.block_size, p.blocks_per_sequence, p.init_pulses,
                             p.photon_threshold);
}

}  // namespace rrdps
