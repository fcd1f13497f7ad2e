#include "rrdps/attacksim.h"

#include <bit>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "rrdps/parallel.h"
#include "rrdps/params.h"
#include "rrdps/random.h"

namespace rrdps {

void AttackScenario::validate() const {
  if (!(p_z >= 0.0 && p_z <= 1.0)) throw ParamError("p_z", fmt::format("must lie in [0, 1], got {}", p_z));
  if (pulses_per_sequence < 1) throw ParamError("M", "pulses per sequence must be at least 1");
  if (sequences < 1) throw ParamError("n_sequences", "must be at least 1");
  if (measured < 0) throw ParamError("n_measured", "must be nonnegative");
  if (clean < 0) throw ParamError("n_clean", "must be nonnegative");
  if (measured + clean > sequences) {
    throw ParamError("n_measured", fmt::format("measured + clean = {} exceeds n_sequences = {}", measured + clean,
                                               sequences));
  }
  if (!(eta_nominal >= 0.0 && eta_nominal <= 1.0)) {
    throw ParamError("eta_nominal", fmt::format("must lie in [0, 1], got {}", eta_nominal));
  }
  const auto honest = std::llround(static_cast<double>(sequences) * static_cast<double>(pulses_per_sequence) *
                                   eta_nominal);
  const std::int64_t forwarded = (measured + clean) * pulses_per_sequence;
  if (forwarded != honest) {
    throw ParamError("eta_nominal", fmt::format("attack forwards {} pulses but the honest channel delivers {}",
                                                forwarded, honest));
  }
}

void AttackStats::merge(const AttackStats& o) {
  trials += o.trials;
  successes += o.successes;
  detections += o.detections;
  sifted_naive += o.sifted_naive;
  sifted_modified += o.sifted_modified;
  sifted_naive_sq += o.sifted_naive_sq;
  sifted_modified_sq += o.sifted_modified_sq;
  max_sifted_modified = std::max(max_sifted_modified, o.max_sifted_modified);
  success_bit_errors += o.success_bit_errors;
  success_eve_mismatches += o.success_eve_mismatches;
  success_sifted_bits += o.success_sifted_bits;
  for (const auto& [clicks, count] : o.clicks_histogram) clicks_histogram[clicks] += count;
}

double AttackStats::success_rate() const { return trials ? static_cast<double>(successes) / trials : 0.0; }

double AttackStats::success_stderr() const {
  const double p = success_rate();
  return trials ? std::sqrt(p * (1.0 - p) / trials) : 0.0;
}

double AttackStats::mean_sifted_naive() const { return trials ? static_cast<double>(sifted_naive) / trials : 0.0; }

double AttackStats::mean_sifted_modified() const {
  return trials ? static_cast<double>(sifted_modified) / trials : 0.0;
}

namespace {

double mean_stderr(double sum, double sum_sq, std::int64_t n) {
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1));
  return std::sqrt(var / n);
}

// Failures before the first success of a Bernoulli(q) process, capped at `cap`.
std::int64_t geometric_gap(Xoshiro256& rng, double q, std::int64_t cap) {
  if (q >= 1.0) return 0;
  if (q <= 0.0) return cap;
  const double u = 1.0 - rng.uniform();  // (0, 1]
  const double gap = std::floor(std::log(u) / std::log1p(-q));
  return gap >= static_cast<double>(cap) ? cap : static_cast<std::int64_t>(gap);
}

std::uint64_t low_mask(int bits) { return bits >= 64 ? ~0ULL : ((1ULL << bits) - 1); }

// A word whose lowest `bits` bits are independent Bernoulli(p).
std::uint64_t bernoulli_word(Xoshiro256& rng, double p, int bits) {
  if (p == 0.5) return rng() & low_mask(bits);
  if (p > 0.5) return ~bernoulli_word(rng, 1.0 - p, bits) & low_mask(bits);
  std::uint64_t word = 0;
  for (std::int64_t pos = geometric_gap(rng, p, bits); pos < bits; pos += 1 + geometric_gap(rng, p, bits)) {
    word |= 1ULL << pos;
  }
  return word;
}

struct SequenceTally {
  std::int64_t sifted = 0;
  std::int64_t errors = 0;
  std::int64_t eve_mismatches = 0;
};

// One forwarded sequence; every pulse reaches Bob and is detected. Bit
// convention in the words: basis 1 = X, 0 = Z.
SequenceTally forward_sequence(Xoshiro256& rng, double p_z, std::int64_t pulses, bool intercepted, bool bob_x) {
  SequenceTally tally;
  for (std::int64_t offset = 0; offset < pulses; offset += 64) {
    const int bits = static_cast<int>(std::min<std::int64_t>(64, pulses - offset));
    const std::uint64_t mask = low_mask(bits);
    const std::uint64_t alice_x = bernoulli_word(rng, 1.0 - p_z, bits);
    const std::uint64_t alice_bits = rng() & mask;
    const std::uint64_t sifted = (bob_x ? alice_x : ~alice_x) & mask;

    std::uint64_t bob_bits;
    std::uint64_t eve_bits = 0;
    if (intercepted) {
      // Z measurement: exact on Z-encoded pulses, a fair coin on X-encoded ones.
      eve_bits = (alice_bits & ~alice_x) | (rng() & alice_x);
      bob_bits = bob_x ? (rng() & mask) : eve_bits;
    } else {
      const std::uint64_t random_bits = rng();
      bob_bits = ((alice_bits & sifted) | (random_bits & ~sifted)) & mask;
    }

    tally.sifted += std::popcount(sifted);
    tally.errors += std::popcount(sifted & (bob_bits ^ alice_bits));
    if (intercepted) tally.eve_mismatches += std::popcount(sifted & (eve_bits ^ bob_bits));
  }
  return tally;
}

void record_trial(AttackStats& stats, std::int64_t naive, std::int64_t modified) {
  ++stats.trials;
  stats.sifted_naive += naive;
  stats.sifted_modified += modified;
  stats.sifted_naive_sq += static_cast<double>(naive) * naive;
  stats.sifted_modified_sq += static_cast<double>(modified) * modified;
  stats.max_sifted_modified = std::max(stats.max_sifted_modified, modified);
}

}  // namespace

double AttackStats::stderr_sifted_naive() const { return mean_stderr(sifted_naive, sifted_naive_sq, trials); }

double AttackStats::stderr_sifted_modified() const {
  return mean_stderr(sifted_modified, sifted_modified_sq, trials);
}

double analytic_success(const AttackScenario& s) {
  return std::pow(s.p_z, static_cast<double>(s.measured)) * std::pow(1.0 - s.p_z, static_cast<double>(s.clean));
}

AttackStats run_attack(const AttackScenario& scenario, std::int64_t trials, std::uint64_t seed) {
  scenario.validate();
  if (trials < 1) throw ParamError("trials", "must be at least 1");
  const FastBernoulli bob_picks_z(scenario.p_z);
  const std::int64_t forwarded = scenario.measured + scenario.clean;
  const std::int64_t M = scenario.pulses_per_sequence;

  std::vector<AttackStats> partial(worker_count());
  parallel_chunks(static_cast<std::size_t>(trials), [&](std::size_t begin, std::size_t end, unsigned w) {
    AttackStats& stats = partial[w];
    for (std::size_t t = begin; t < end; ++t) {
      Xoshiro256 rng = Xoshiro256::for_trial(seed, t);
      bool pattern_match = true;
      std::int64_t naive = 0;
      std::int64_t modified = 0;
      std::int64_t errors = 0;
      std::int64_t eve_mismatches = 0;
      for (std::int64_t seq = 0; seq < forwarded; ++seq) {
        const bool intercepted = seq < scenario.measured;
        const bool bob_x = !bob_picks_z(rng);
        // Eve wants Z on the sequences she measured and X on the clean ones.
        if (bob_x == intercepted) pattern_match = false;
        const SequenceTally tally = forward_sequence(rng, scenario.p_z, M, intercepted, bob_x);
        naive += tally.sifted;
        errors += tally.errors;
        eve_mismatches += tally.eve_mismatches;
        // Step 2.5: only sequences with a single detection survive.
        if (M == 1) modified += tally.sifted;
      }
      stats.detections += forwarded * M;
      stats.clicks_histogram[M] += forwarded;
      record_trial(stats, naive, modified);
      if (pattern_match) {
        ++stats.successes;
        stats.success_bit_errors += errors;
        stats.success_eve_mismatches += eve_mismatches;
        stats.success_sifted_bits += naive;
      }
    }
  });
  AttackStats total;
  for (const auto& s : partial) total.merge(s);
  // Sequences Eve blocked produce no clicks.
  total.clicks_histogram[0] += (scenario.sequences - forwarded) * trials;
  return total;
}

AttackStats honest_baseline(double p_z, std::int64_t pulses_per_sequence, std::int64_t sequences, double eta,
                            std::uint64_t seed, std::int64_t trials) {
  if (!(p_z >= 0.0 && p_z <= 1.0)) throw ParamError("p_z", "must lie in [0, 1]");
  if (!(eta >= 0.0 && eta <= 1.0)) throw ParamError("eta", "must lie in [0, 1]");
  if (pulses_per_sequence < 1) throw ParamError("M", "must be at least 1");
  if (sequences < 1) throw ParamError("n_sequences", "must be at least 1");
  if (trials < 1) throw ParamError("trials", "must be at least 1");
  const FastBernoulli picks_z(p_z);
  const std::int64_t M = pulses_per_sequence;

  std::vector<AttackStats> partial(worker_count());
  parallel_chunks(static_cast<std::size_t>(trials), [&](std::size_t begin, std::size_t end, unsigned w) {
    AttackStats& stats = partial[w];
    for (std::size_t t = begin; t < end; ++t) {
      Xoshiro256 rng = Xoshiro256::for_trial(seed, t);
      std::int64_t naive = 0;
      std::int64_t modified = 0;
      for (std::int64_t seq = 0; seq < sequences; ++seq) {
        const bool bob_z = picks_z(rng);
        std::int64_t clicks = 0;
        std::int64_t matched = 0;
        for (std::int64_t pos = geometric_gap(rng, eta, M); pos < M; pos += 1 + geometric_gap(rng, eta, M)) {
          ++clicks;
          if (picks_z(rng) == bob_z) ++matched;
        }
        naive += matched;
        if (clicks == 1) modified += matched;
        stats.detections += clicks;
        ++stats.clicks_histogram[clicks];
      }
      record_trial(stats, naive, modified);
    }
  });
  AttackStats total;
  for (const auto& s : partial) total.merge(s);
  return total;
}

}  // namespace rrdps
