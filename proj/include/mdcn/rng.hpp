#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace mdcn {

/// Deterministic random stream. Wraps mt19937_64 but maps draws to
/// uniforms by hand so sampled values are pinned by this code alone,
/// not by the standard library's distribution internals.
class RandomEngine {
 public:
  explicit RandomEngine(std::uint64_t seed) : gen_(seed) {}

  // Derives an independent stream, e.g. per worker: (global seed, index).
  static RandomEngine derive(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<unsigned>(seed & 0xffffffffu),
                      static_cast<unsigned>(seed >> 32),
                      static_cast<unsigned>(index & 0xffffffffu),
                      static_cast<unsigned>(index >> 32)};
    RandomEngine r(0);
    r.gen_.seed(seq);
    return r;
  }

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Rejection sampling keeps it unbiased.
  std::uint64_t index(std::uint64_t n) {
    if (n <= 1) return 0;
    std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % n;
    std::uint64_t v;
    do {
      v = gen_();
    } while (v >= limit);
    return v % n;
  }

  // Standard normal via Box-Muller (spare value cached).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mdcn
