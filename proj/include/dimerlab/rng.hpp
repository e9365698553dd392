#pragma once

// Seeded randomness with a fixed, documented algorithm: all draws come from
// std::mt19937_64 through our own mapping functions, so streams are
// bit-reproducible across platforms and standard-library versions
// (std::uniform_int_distribution is not portable).

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace dimerlab {

class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t raw() { return eng_(); }

  // Uniform in [0, n) by rejection; unbiased.
  uint64_t below(uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below(0)");
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t r;
    do {
      r = eng_();
    } while (r >= limit);
    return r % n;
  }

  // Uniform double in [0,1) with 53 random bits.
  double uniform() { return double(eng_() >> 11) * 0x1.0p-53; }

  // Index into a nonempty cumulative-probability style weight vector.
  int pick_weighted(const std::vector<double>& w) {
    double total = 0;
    for (double x : w) total += x;
    double r = uniform() * total;
    for (int i = 0; i < int(w.size()); ++i) {
      r -= w[i];
      if (r < 0) return i;
    }
    return int(w.size()) - 1;
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace dimerlab
