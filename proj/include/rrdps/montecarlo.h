#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rrdps/params.h"
#include "rrdps/random.h"

namespace rrdps {

// kStandard: variable-delay measurement with sifting on the first clicked
// block. kBeamDump: one interferometer arm blocked, two detectors, used to
// count double clicks.
enum class McMode { kStandard, kBeamDump };

std::string_view to_string(McMode mode);
McMode parse_mc_mode(std::string_view text);

struct McConfig {
  ProtocolParams params;
  std::int64_t trials = 1;
  std::uint64_t seed = 0;
  McMode mode = McMode::kStandard;

  void validate() const;
};

struct McStats {
  std::int64_t sequences = 0;
  std::int64_t detected = 0;             // sequences yielding a sifted block
  std::int64_t bit_errors = 0;           // among detected
  std::int64_t double_counts = 0;        // beam-dump mode only
  std::int64_t multi_photon_blocks = 0;  // blocks with >= 2 photons at Bob's input
  // Sequences whose first photon-carrying block holds >= 2 photons. This is
  // the population the double-count estimator has to bound.
  std::int64_t first_block_multi = 0;
  // Beam-dump double counts that landed on such a block.
  std::int64_t double_counts_on_first_multi = 0;
  std::map<int, std::int64_t> clicks_histogram;

  void merge(const McStats& other);
  bool operator==(const McStats&) const = default;
};

// One detection-relevant event inside a block. Slots are numbered
// 0..2L-1; even slots are the interfering (key-generating) ones.
struct ClickEvent {
  int slot = 0;
  int detector = 0;
  bool from_photon = false;
};

struct BlockRecord {
  int photons = 0;                 // photons reaching Bob (ground truth)
  std::vector<ClickEvent> events;  // every photon or dark count that fired
};

struct SequenceOutcome {
  int accepted_block = -1;  // sifted block index, -1 when discarded
  bool bit_error = false;
  bool double_count = false;
  int clicks = 0;
};

// Simulates one sequence. When `log` is non-null it receives one record per
// block so the sifting decision can be replayed.
SequenceOutcome simulate_sequence(const ProtocolParams& p, McMode mode, Xoshiro256& rng,
                                  std::vector<BlockRecord>* log = nullptr);

// Runs cfg.trials sequences. Trial t draws from Xoshiro256::for_trial(seed, t),
// so the result is identical for any thread count.
McStats simulate(const McConfig& cfg);

// Photons of one pulse that survive the channel: N ~ Poisson(mu) emitted,
// each kept with probability eta.
int sample_arriving_photons(const SmallPoisson& source, double eta, Xoshiro256& rng);

struct McComparison {
  std::string quantity;
  double analytic = 0.0;
  double empirical = 0.0;
  double std_error = 0.0;
  double z = 0.0;
  bool flagged = false;
};

struct McReport {
  McStats stats;
  std::vector<McComparison> rows;
};

// sqrt(p (1 - p) / n) for an empirical proportion p over n samples.
double binomial_stderr(double p, std::int64_t n);

// Runs `simulate` and sets the empirical rates against the closed forms.
// Standard mode: Q and e_bit (two-sided, flagged when |z| > 3).
// Beam-dump mode: 8x double-count rate against e_mB (two-sided) and the
// double-count probability given a multi-photon first block against its
// 1/8 lower bound (flagged when z < -3).
McReport compare_to_analytic(const McConfig& cfg);

}  // namespace rrdps
