#include "rrdps/optimizer.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "rrdps/parallel.h"

namespace rrdps {

std::vector<double> log_grid(double lo, double hi, int points_per_decade) {
  if (!(lo > 0.0) || !(hi >= lo) || points_per_decade < 1) {
    throw std::invalid_argument(fmt::format("log_grid: invalid range [{}, {}] / {}", lo, hi, points_per_decade));
  }
  const double log_lo = std::log10(lo);
  const double log_hi = std::log10(hi);
  const auto intervals = static_cast<int>(std::ceil((log_hi - log_lo) * points_per_decade - 1e-9));
  std::vector<double> grid;
  grid.reserve(intervals + 1);
  grid.push_back(lo);
  for (int i = 1; i < intervals; ++i) {
    grid.push_back(std::pow(10.0, log_lo + (log_hi - log_lo) * i / intervals));
  }
  if (intervals > 0) grid.push_back(hi);
  return grid;
}

namespace {

// Keeps the best (clamped G, nu_th) seen so far; ties prefer smaller nu_th,
// then the point seen first.
class BestTracker {
 public:
  // Returns true when (mu, nu_th) becomes the new best point.
  bool offer(double mu, int nu_th, const KeyRateResult& r) {
    if (has_value_ && !(r.key_rate > best_.key_rate || (r.key_rate == best_.key_rate && nu_th < nu_th_))) {
      return false;
    }
    has_value_ = true;
    best_ = r;
    mu_ = mu;
    nu_th_ = nu_th;
    return true;
  }

  double mu() const { return mu_; }
  int nu_th() const { return nu_th_; }
  const KeyRateResult& result() const { return best_; }

 private:
  bool has_value_ = false;
  KeyRateResult best_;
  double mu_ = 0.0;
  int nu_th_ = 0;
};

class PointEvaluator {
 public:
  PointEvaluator(const ProtocolParams& base, double eta, std::int64_t M) : p_(base) {
    p_.transmission = eta;
    p_.blocks_per_sequence = M;
    p_.photon_threshold = 0;
    p_.mean_photons = 0.0;
    p_.validate();
  }

  // Rates that do not depend on the threshold, evaluated once per mu.
  SequenceRates rates_at(double mu) {
    p_.mean_photons = mu;
    p_.photon_threshold = 0;
    return sequence_rates(p_);
  }

  KeyRateResult evaluate(double mu, SequenceRates rates, int nu_th) const {
    rates.sequence_tag =
        sequence_tag_probability(block_tag_probability(p_.block_size, mu, nu_th), p_.blocks_per_sequence);
    return key_rate_from_rates(rates, p_.detector, p_.block_size, p_.blocks_per_sequence, p_.init_pulses, nu_th);
  }

  int block_size() const { return p_.block_size; }

 private:
  ProtocolParams p_;
};

}  // namespace

Optimum optimize_point(const ProtocolParams& base, double eta, std::int64_t M, const SearchOptions& options) {
  if (!(eta > 0.0)) throw ParamError("eta", fmt::format("transmission must be positive, got {}", eta));
  PointEvaluator evaluator(base, eta, M);
  // Long sequences saturate the detection rate at very weak pulses; extend
  // the grid down to where the mean photon number per sequence is ~1e-2.
  const double saturation_mu = 1e-2 / (static_cast<double>(M) * base.block_size * eta);
  const double mu_min = options.extend_mu_range ? std::min(options.mu_min, saturation_mu) : options.mu_min;
  const std::vector<double> grid = log_grid(mu_min, options.mu_max, options.points_per_decade);
  const int max_threshold = evaluator.block_size() - 1;

  BestTracker best;
  // Best coarse cell per threshold, so each refined threshold is bracketed
  // around its own peak.
  std::vector<double> cell_rate(max_threshold + 1, -1.0);
  std::vector<std::size_t> cell_index(max_threshold + 1, 0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double mu = grid[i];
    const SequenceRates rates = evaluator.rates_at(mu);
    double previous = -1.0;
    int decreases = 0;
    for (int nu = 0; nu <= max_threshold; ++nu) {
      const KeyRateResult r = evaluator.evaluate(mu, rates, nu);
      best.offer(mu, nu, r);
      if (r.key_rate > cell_rate[nu]) {
        cell_rate[nu] = r.key_rate;
        cell_index[nu] = i;
      }
      if (!options.full_threshold_scan) {
        decreases = (previous >= 0.0 && r.key_rate < previous) ? decreases + 1 : 0;
        if (decreases >= 3) break;
      }
      previous = r.key_rate;
    }
  }

  if (best.result().key_rate > 0.0) {
    const int centre = best.nu_th();
    constexpr double kInvPhi = 0.6180339887498949;
    for (int nu = std::max(0, centre - 1); nu <= std::min(max_threshold, centre + 1); ++nu) {
      if (!(cell_rate[nu] > 0.0)) continue;
      const std::size_t index = cell_index[nu];
      const double lo = std::log(grid[index == 0 ? 0 : index - 1]);
      const double hi = std::log(grid[std::min(index + 1, grid.size() - 1)]);
      auto rate_at = [&](double log_mu) {
        const double mu = std::exp(log_mu);
        const KeyRateResult r = evaluator.evaluate(mu, evaluator.rates_at(mu), nu);
        best.offer(mu, nu, r);
        return r.key_rate;
      };
      double a = lo;
      double b = hi;
      double c = b - kInvPhi * (b - a);
      double d = a + kInvPhi * (b - a);
      double fc = rate_at(c);
      double fd = rate_at(d);
      for (int it = 0; it < options.refine_iterations && (b - a) > 1e-12; ++it) {
        if (fc >= fd) {
          b = d;
          d = c;
          fd = fc;
          c = b - kInvPhi * (b - a);
          fc = rate_at(c);
        } else {
          a = c;
          c = d;
          fc = fd;
          d = a + kInvPhi * (b - a);
          fd = rate_at(d);
        }
      }
    }
  }

  Optimum out;
  out.transmission = eta;
  out.mean_photons = best.mu();
  out.photon_threshold = best.nu_th();
  out.blocks_per_sequence = M;
  out.result = best.result();
  return out;
}

namespace {

void validate_eta_grid(std::span<const double> eta_grid) {
  if (eta_grid.empty()) throw ParamError("eta", "transmission grid is empty");
  for (std::size_t i = 0; i < eta_grid.size(); ++i) {
    if (!(eta_grid[i] > 0.0 && eta_grid[i] <= 1.0)) {
      throw ParamError("eta", fmt::format("grid entry {} outside (0, 1]", eta_grid[i]));
    }
    if (i > 0 && !(eta_grid[i] > eta_grid[i - 1])) {
      throw ParamError("eta", "transmission grid must be strictly increasing");
    }
  }
}

}  // namespace

std::vector<Optimum> sweep_curves(const CurveSpec& spec, const SearchOptions& options) {
  validate_eta_grid(spec.eta_grid);
  if (spec.M_values.empty()) throw ParamError("M", "no sequence lengths given");
  for (auto M : spec.M_values) {
    if (M < 1) throw ParamError("M", fmt::format("sequence length must be at least 1, got {}", M));
  }

  const std::size_t n_eta = spec.eta_grid.size();
  std::vector<Optimum> rows(spec.M_values.size() * n_eta);
  parallel_chunks(rows.size(), [&](std::size_t begin, std::size_t end, unsigned) {
    for (std::size_t k = begin; k < end; ++k) {
      rows[k] = optimize_point(spec.base, spec.eta_grid[k % n_eta], spec.M_values[k / n_eta], options);
    }
  });
  return rows;
}

Optimum optimize_with_M(const ProtocolParams& base, double eta, std::span<const std::int64_t> M_candidates,
                        const SearchOptions& options) {
  if (M_candidates.empty()) throw ParamError("M", "candidate list is empty");
  Optimum best = optimize_point(base, eta, M_candidates.front(), options);
  for (std::size_t i = 1; i < M_candidates.size(); ++i) {
    Optimum candidate = optimize_point(base, eta, M_candidates[i], options);
    if (candidate.result.key_rate > best.result.key_rate) best = candidate;
  }
  return best;
}

std::vector<Optimum> sweep_optimal_M(const ProtocolParams& base, std::span<const double> eta_grid,
                                     std::span<const std::int64_t> M_candidates, const SearchOptions& options) {
  validate_eta_grid(eta_grid);
  std::vector<Optimum> rows(eta_grid.size());
  parallel_chunks(rows.size(), [&](std::size_t begin, std::size_t end, unsigned) {
    for (std::size_t k = begin; k < end; ++k) rows[k] = optimize_with_M(base, eta_grid[k], M_candidates, options);
  });
  return rows;
}

std::vector<std::int64_t> default_M_candidates() {
  std::vector<std::int64_t> out;
  std::int64_t decade = 1;
  for (int k = 0; k <= 6; ++k, decade *= 10) {
    for (std::int64_t mantissa : {1, 2, 5}) out.push_back(mantissa * decade);
  }
  return out;
}

std::int64_t heuristic_M(int block_size, std::int64_t init_pulses) {
  if (block_size < 1) throw ParamError("L", "block size must be at least 1");
  // nearbyint honours the default round-to-nearest-even mode.
  const auto rounded = static_cast<std::int64_t>(
      std::nearbyint(static_cast<double>(init_pulses) / static_cast<double>(block_size)));
  return std::max<std::int64_t>(1, rounded);
}

}  // namespace rrdps
