#include "rrdps/montecarlo.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

#include "rrdps/keyrate.h"
#include "rrdps/parallel.h"

namespace rrdps {

std::string_view to_string(McMode mode) { return mode == McMode::kBeamDump ? "beamdump" : "standard"; }

McMode parse_mc_mode(std::string_view text) {
  if (text == "standard") return McMode::kStandard;
  if (text == "beamdump") return McMode::kBeamDump;
  throw ParamError("mode", fmt::format("unknown mode '{}' (expected standard or beamdump)", text));
}

void McConfig::validate() const {
  params.validate();
  if (trials < 1) throw ParamError("trials", fmt::format("must be at least 1, got {}", trials));
  // The per-pulse inversion sampler is meant for weak coherent pulses.
  if (params.mean_photons > 20.0) {
    throw ParamError("mu", fmt::format("Monte Carlo supports mean photon numbers up to 20, got {}",
                                       params.mean_photons));
  }
}

void McStats::merge(const McStats& other) {
  sequences += other.sequences;
  detected += other.detected;
  bit_errors += other.bit_errors;
  double_counts += other.double_counts;
  multi_photon_blocks += other.multi_photon_blocks;
  first_block_multi += other.first_block_multi;
  double_counts_on_first_multi += other.double_counts_on_first_multi;
  for (const auto& [clicks, count] : other.clicks_histogram) clicks_histogram[clicks] += count;
}

int sample_arriving_photons(const SmallPoisson& source, double eta, Xoshiro256& rng) {
  const int emitted = source(rng);
  int arriving = 0;
  for (int i = 0; i < emitted; ++i) arriving += rng.uniform() < eta ? 1 : 0;
  return arriving;
}

namespace {

constexpr int kNoClick = -1;

// Per-worker simulation state; scratch buffers are reused across sequences.
class SequenceSimulator {
 public:
  SequenceSimulator(const ProtocolParams& p, McMode mode)
      : p_(p),
        mode_(mode),
        source_(p.mean_photons),
        signal_error_(p.system_error),
        dark_(p.dark_count),
        has_dark_(p.dark_count > 0.0) {}

  SequenceOutcome run(Xoshiro256& rng, McStats* stats, std::vector<BlockRecord>* log) {
    SequenceOutcome out;
    bool seen_photon_block = false;
    bool first_photon_block_multi = false;
    int first_photon_block = -1;
    int first_click_block = -1;
    int first_click[2] = {kNoClick, kNoClick};  // block of each detector's first click
    int total_clicks = 0;

    for (int m = 0; m < p_.blocks_per_sequence; ++m) {
      int photons = 0;
      events_.clear();
      // Valid-slot photons carry Alice's bit, flipped with probability e_sys.
      // Alice's bit is 0 without loss of generality; detector 1 is an error.
      for (int j = 0; j < p_.block_size; ++j) {
        const int arriving = sample_arriving_photons(source_, p_.transmission, rng);
        for (int k = 0; k < arriving; ++k) {
          ++photons;
          if (mode_ == McMode::kBeamDump) {
            // Half of the photons head for the blocked arm.
            if (rng.coin()) continue;
            events_.push_back({2 * j, rng.coin() ? 1 : 0, true});
          } else if (rng.coin()) {
            events_.push_back({2 * j, signal_error_(rng) ? 1 : 0, true});
          } else {
            events_.push_back({2 * j + 1, rng.coin() ? 1 : 0, true});
          }
        }
      }
      if (has_dark_) {
        for (int slot = 0; slot < 2 * p_.block_size; ++slot) {
          if (dark_(rng)) events_.push_back({slot, rng.coin() ? 1 : 0, false});
        }
      }
      std::stable_sort(events_.begin(), events_.end(),
                       [](const ClickEvent& a, const ClickEvent& b) { return a.slot < b.slot; });

      if (photons >= 2 && stats) ++stats->multi_photon_blocks;
      if (photons > 0 && !seen_photon_block) {
        seen_photon_block = true;
        first_photon_block = m;
        first_photon_block_multi = photons >= 2;
      }

      if (mode_ == McMode::kBeamDump) {
        for (const ClickEvent& e : events_) {
          if (first_click[e.detector] != kNoClick) continue;  // dead until the sequence ends
          first_click[e.detector] = m;
          ++total_clicks;
        }
      } else if (p_.detector == Detector::kThreshold) {
        bool clicked_here[2] = {false, false};
        for (const ClickEvent& e : events_) {
          if (first_click[e.detector] != kNoClick) continue;
          first_click[e.detector] = m;
          clicked_here[e.detector] = true;
          ++total_clicks;
        }
        if (first_click_block < 0 && !events_.empty()) {
          first_click_block = m;
          // Accept when exactly one detector fired and its first click sits
          // in an interfering slot.
          if (clicked_here[0] != clicked_here[1]) {
            const int det = clicked_here[0] ? 0 : 1;
            const auto first = std::find_if(events_.begin(), events_.end(),
                                            [det](const ClickEvent& e) { return e.detector == det; });
            if (first->slot % 2 == 0) {
              out.accepted_block = m;
              out.bit_error = det == 1;
            }
          }
        }
      } else {
        total_clicks += static_cast<int>(events_.size());
        if (first_click_block < 0 && !events_.empty()) {
          first_click_block = m;
          if (events_.size() == 1 && events_.front().slot % 2 == 0) {
            out.accepted_block = m;
            out.bit_error = events_.front().detector == 1;
          }
        }
      }

      if (log) log->push_back({photons, events_});
    }

    if (mode_ == McMode::kBeamDump) {
      out.double_count = first_click[0] != kNoClick && first_click[0] == first_click[1];
    }
    out.clicks = total_clicks;

    if (stats) {
      ++stats->sequences;
      ++stats->clicks_histogram[total_clicks];
      if (out.accepted_block >= 0) {
        ++stats->detected;
        if (out.bit_error) ++stats->bit_errors;
      }
      if (first_photon_block_multi) {
        ++stats->first_block_multi;
        if (out.double_count && first_click[0] == first_photon_block) ++stats->double_counts_on_first_multi;
      }
      if (out.double_count) ++stats->double_counts;
    }
    return out;
  }

 private:
  const ProtocolParams& p_;
  McMode mode_;
  SmallPoisson source_;
  FastBernoulli signal_error_;
  FastBernoulli dark_;
  bool has_dark_;
  std::vector<ClickEvent> events_;
};

}  // namespace

SequenceOutcome simulate_sequence(const ProtocolParams& p, McMode mode, Xoshiro256& rng,
                                  std::vector<BlockRecord>* log) {
  p.validate();
  SequenceSimulator sim(p, mode);
  return sim.run(rng, nullptr, log);
}

McStats simulate(const McConfig& cfg) {
  cfg.validate();
  const unsigned workers = worker_count();
  std::vector<McStats> partial(workers);
  parallel_chunks(static_cast<std::size_t>(cfg.trials), [&](std::size_t begin, std::size_t end, unsigned w) {
    SequenceSimulator sim(cfg.params, cfg.mode);
    for (std::size_t t = begin; t < end; ++t) {
      Xoshiro256 rng = Xoshiro256::for_trial(cfg.seed, t);
      sim.run(rng, &partial[w], nullptr);
    }
  });
  McStats total;
  for (const auto& s : partial) total.merge(s);
  return total;
}

double binomial_stderr(double p, std::int64_t n) {
  if (n <= 0) return std::numeric_limits<double>::quiet_NaN();
  return std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

namespace {

McComparison compare(std::string quantity, double analytic, double empirical, double std_error) {
  McComparison row{std::move(quantity), analytic, empirical, std_error, 0.0, false};
  const double diff = empirical - analytic;
  if (std_error > 0.0) {
    row.z = diff / std_error;
  } else {
    row.z = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
  }
  row.flagged = std::abs(row.z) > 3.0;
  return row;
}

}  // namespace

McReport compare_to_analytic(const McConfig& cfg) {
  McReport report;
  report.stats = simulate(cfg);
  const McStats& s = report.stats;
  const double n = static_cast<double>(s.sequences);

  if (cfg.mode == McMode::kStandard) {
    const double q_hat = s.detected / n;
    report.rows.push_back(compare("Q", detection_rate(cfg.params), q_hat, binomial_stderr(q_hat, s.sequences)));
    if (s.detected > 0 && detection_rate(cfg.params) > 0.0) {
      const double e_hat = static_cast<double>(s.bit_errors) / s.detected;
      report.rows.push_back(
          compare("e_bit", bit_error_rate(cfg.params), e_hat, binomial_stderr(e_hat, s.detected)));
    }
  } else {
    ProtocolParams threshold = cfg.params;
    threshold.detector = Detector::kThreshold;
    const double dc_hat = s.double_counts / n;
    report.rows.push_back(
        compare("e_mB", double_count_bound(threshold), 8.0 * dc_hat, 8.0 * binomial_stderr(dc_hat, s.sequences)));
    if (s.first_block_multi > 0) {
      const double cond = static_cast<double>(s.double_counts_on_first_multi) / s.first_block_multi;
      McComparison row =
          compare("p_dc_given_multi", 0.125, cond, binomial_stderr(cond, s.first_block_multi));
      row.flagged = row.z < -3.0;  // one-sided: only falling below 1/8 is a violation
      report.rows.push_back(row);
    }
  }
  return report;
}

}  // namespace rrdps
