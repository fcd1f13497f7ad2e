#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>

namespace rrdps {

// SplitMix64 step; used to expand seeds into generator state.
constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// xoshiro256** (period 2^256 - 1). Satisfies UniformRandomBitGenerator.
//
// Every trial of a stochastic run gets its own generator derived from
// (seed, trial index), so results do not depend on how trials are split
// across threads.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64(sm);
  }

  static Xoshiro256 for_trial(std::uint64_t seed, std::uint64_t trial) {
    std::uint64_t mix = seed;
    const std::uint64_t base = splitmix64(mix);
    std::uint64_t key = base ^ (trial * 0xD1B54A32D192ED03ULL);
    return Xoshiro256(splitmix64(key));
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t result = std::rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = std::rotl(s_[3], 45);
    return result;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  bool coin() { return ((*this)() >> 63) != 0; }

 private:
  std::uint64_t s_[4];
};

// Bernoulli trial with a precomputed 64-bit threshold; cheaper than
// uniform() in hot loops. P(true) = p up to 2^-64.
class FastBernoulli {
 public:
  explicit FastBernoulli(double p) {
    if (p <= 0.0) {
      threshold_ = 0;
      always_ = false;
    } else if (p >= 1.0) {
      threshold_ = 0;
      always_ = true;
    } else {
      threshold_ = static_cast<std::uint64_t>(std::ldexp(p, 64));
      always_ = false;
    }
  }

  bool operator()(Xoshiro256& rng) const { return always_ || rng() < threshold_; }

 private:
  std::uint64_t threshold_ = 0;
  bool always_ = false;
};

// Poisson sampler by sequential inversion, for the small means that occur per
// pulse. The P(N = 0) branch costs a single integer comparison.
class SmallPoisson {
 public:
  explicit SmallPoisson(double mean) : mean_(mean), p_zero_(std::exp(-mean)), nonzero_(1.0 - std::exp(-mean)) {}

  int operator()(Xoshiro256& rng) const {
    if (!nonzero_(rng)) return 0;
    // Conditional on N >= 1: invert the CDF of the remaining mass.
    double u = rng.uniform() * (1.0 - p_zero_) + p_zero_;
    int k = 1;
    double pmf = p_zero_ * mean_;
    double cdf = p_zero_ + pmf;
    while (u >= cdf && pmf > 0.0) {
      ++k;
      pmf *= mean_ / k;
      cdf += pmf;
    }
    return k;
  }

  double mean() const { return mean_; }

 private:
  double mean_;
  double p_zero_;
  FastBernoulli nonzero_;
};

}  // namespace rrdps
