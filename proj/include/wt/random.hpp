#pragma once

#include <cstdint>
#include <random>

#include "wt/matrix.hpp"

namespace wt {

// Engine plus distribution helpers whose output depends only on the seed, not
// on the standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)); }
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

inline void fill_uniform(Matrix& m, Rng& rng, double scale) {
  for (double& v : m.values()) v = rng.uniform(-scale, scale);
}

}  // namespace wt
