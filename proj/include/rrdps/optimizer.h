#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rrdps/keyrate.h"
#include "rrdps/params.h"

namespace rrdps {

struct Optimum {
  double transmission = 0.0;
  double mean_photons = 0.0;
  int photon_threshold = 0;
  std::int64_t blocks_per_sequence = 1;
  KeyRateResult result;
};

// Search controls for optimize_point. The defaults are the production
// settings; tests use `full_threshold_scan` and finer grids as oracles.
struct SearchOptions {
  double mu_min = 1e-6;
  // Lower the grid start below mu_min when M L eta is so large that weaker
  // pulses still saturate the detection rate.
  bool extend_mu_range = true;
  double mu_max = 1.0;
  int points_per_decade = 20;
  // Scan every nu_th in [0, L-1] instead of stopping after three consecutive
  // decreases of the clamped rate.
  bool full_threshold_scan = false;
  // Golden-section iterations per refined threshold.
  int refine_iterations = 60;
};

struct CurveSpec {
  std::vector<double> eta_grid;           // strictly increasing, positive
  std::vector<std::int64_t> M_values;     // one curve per entry
  ProtocolParams base;                    // mu, nu_th, eta, M are ignored
};

// n points per decade from lo to hi inclusive, log-spaced. The end points
// are exact.
std::vector<double> log_grid(double lo, double hi, int points_per_decade);

// Maximizes the clamped key rate over (mu, nu_th) at fixed (eta, M).
// Coarse log grid in mu x integer scan in nu_th, then golden-section
// refinement in log mu around the best grid cell for the best threshold and
// its neighbours. Ties go to the smaller nu_th. Deterministic.
Optimum optimize_point(const ProtocolParams& base, double eta, std::int64_t M, const SearchOptions& options = {});

// One Optimum per (M, eta), ordered by M then eta (in the order given).
std::vector<Optimum> sweep_curves(const CurveSpec& spec, const SearchOptions& options = {});

// Best optimize_point result across the candidate sequence lengths. Ties go
// to the earlier candidate.
Optimum optimize_with_M(const ProtocolParams& base, double eta, std::span<const std::int64_t> M_candidates,
                        const SearchOptions& options = {});

// One optimize_with_M row per eta.
std::vector<Optimum> sweep_optimal_M(const ProtocolParams& base, std::span<const double> eta_grid,
                                     std::span<const std::int64_t> M_candidates, const SearchOptions& options = {});

// {1, 2, 5} x 10^k for k = 0..6.
std::vector<std::int64_t> default_M_candidates();

// Sequence length whose duration matches the initialization time:
// max(1, round(c_d / L)), rounding half to even.
std::int64_t heuristic_M(int block_size, std::int64_t init_pulses);

}  // namespace rrdps
