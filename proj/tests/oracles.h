#pragma once

// Test-only reference implementations. These deliberately use the textbook
// forms (direct sums, arbitrary precision) rather than the library's
// numerically tuned paths.

#include <cmath>
#include <cstdint>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "rrdps/keyrate.h"
#include "rrdps/params.h"

namespace oracle {

using Real = boost::multiprecision::cpp_bin_float_50;

inline Real binary_entropy(Real x) {
  using boost::multiprecision::log;
  if (x == 0 || x == 1) return 0;
  return -(x * log(x) + (1 - x) * log(1 - x)) / log(Real(2));
}

// P(N > nu) for N ~ Poisson(L mu): the upper tail summed directly, term by
// term, far past the point where terms stop mattering at 50 digits.
inline Real poisson_tail(int L, double mu, int nu) {
  using boost::multiprecision::exp;
  using boost::multiprecision::log;
  using boost::multiprecision::lgamma;
  const Real lambda = Real(L) * Real(mu);
  if (lambda == 0) return 0;
  const int last = nu + 200 + static_cast<int>(static_cast<double>(lambda) + 30 * std::sqrt(static_cast<double>(lambda)));
  Real sum = 0;
  for (int k = nu + 1; k <= last; ++k) {
    sum += exp(-lambda + k * log(lambda) - lgamma(Real(k + 1)));
  }
  return sum;
}

// 1 - (1 - e)^M. When e M is small the subtraction would eat all 50 digits,
// so sum the binomial series sum_k C(M, k) (-1)^(k+1) e^k instead.
inline Real sequence_tag(Real block_tag, std::int64_t M) {
  using boost::multiprecision::abs;
  using boost::multiprecision::pow;
  if (block_tag * M >= Real("0.25")) return 1 - pow(1 - block_tag, Real(M));
  Real sum = 0;
  Real term = -1;
  for (std::int64_t k = 1; k <= M; ++k) {
    term *= -block_tag * Real(M - k + 1) / Real(k);
    sum += term;
    if (abs(term) < abs(sum) * Real("1e-45")) break;
  }
  return sum;
}

// Term-by-term sum_{m<M} r^m.
inline Real geometric_sum(Real r, std::int64_t M) {
  Real sum = 0;
  Real power = 1;
  for (std::int64_t m = 0; m < M; ++m) {
    sum += power;
    power *= r;
  }
  return sum;
}

struct Rates {
  Real Q, e_bit, e_mB;
};

// The appendix expressions, with the geometric series summed term by term.
inline Rates channel_rates(const rrdps::ProtocolParams& p) {
  using boost::multiprecision::exp;
  using boost::multiprecision::pow;
  const Real L = p.block_size;
  const Real x = L * Real(p.transmission) * Real(p.mean_photons);
  const Real dc = p.dark_count;
  const Real r = exp(-x) * pow(1 - dc, 2 * L);
  const Real S = geometric_sum(r, p.blocks_per_sequence);
  const Real single = x * exp(-x) / 2;
  Rates out;
  out.Q = S * (single + L * dc);
  out.e_bit = out.Q > 0 ? S * (single * Real(p.system_error) + L * dc / 2) / out.Q : Real(0);
  out.e_mB = 8 * S * (x * x * exp(-x) / 16 + single * (2 * L - 1) * dc + L * (2 * L - 1) * dc * dc);
  return out;
}

// Straight evaluation of the key-rate formula with uncapped-to-1/2 phase
// entropy replaced by the production convention (bounds >= 1/2 cost 1 bit).
inline double key_rate(const rrdps::ProtocolParams& p) {
  const Rates r = channel_rates(p);
  const double Q = static_cast<double>(r.Q);
  if (Q <= 0) return 0.0;
  const double emb = p.detector == rrdps::Detector::kThreshold ? static_cast<double>(r.e_mB) : 0.0;
  const double tag = static_cast<double>(
      sequence_tag(poisson_tail(p.block_size, p.mean_photons, p.photon_threshold), p.blocks_per_sequence));
  if (Q - emb <= 0 || tag > Q - emb) return 0.0;
  const double frac = tag / (Q - emb);
  const double eph = frac + (1 - frac) * p.photon_threshold / (p.block_size - 1.0);
  const double h_ph = static_cast<double>(binary_entropy(Real(eph < 0.5 ? eph : 0.5)));
  const double h_bit = static_cast<double>(binary_entropy(r.e_bit));
  const double G = Q / (static_cast<double>(p.blocks_per_sequence) * p.block_size + p.init_pulses) *
                   (1 - h_bit - emb / Q - (1 - emb / Q) * h_ph);
  return G > 0 ? G : 0.0;
}

struct BruteForceOptimum {
  double G = 0.0;
  double mu = 0.0;
  int nu_th = 0;
};

// Exhaustive search: `points` log-spaced mu in [mu_lo, mu_hi] x every nu_th.
inline BruteForceOptimum brute_force(rrdps::ProtocolParams p, double mu_lo, double mu_hi, int points) {
  BruteForceOptimum best;
  for (int i = 0; i < points; ++i) {
    const double mu = mu_lo * std::pow(mu_hi / mu_lo, static_cast<double>(i) / (points - 1));
    p.mean_photons = mu;
    for (int nu = 0; nu < p.block_size; ++nu) {
      p.photon_threshold = nu;
      const double G = rrdps::key_rate(p).key_rate;
      if (G > best.G) best = {G, mu, nu};
    }
  }
  return best;
}

}  // namespace oracle
