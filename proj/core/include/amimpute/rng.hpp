#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace amimpute {

// Seedable 64-bit Mersenne Twister with deterministic stream splitting.
//
// Streams are keyed by a master seed plus an ordered list of integers
// (population id, replicate index, ...). Keys are folded through SplitMix64,
// so stream(s, {a, b}) and stream(s, {b, a}) are unrelated.
class Rng {
 public:
  using engine_type = std::mt19937_64;

  explicit Rng(std::uint64_t seed);

  static Rng stream(std::uint64_t master_seed, std::initializer_list<std::uint64_t> keys);
  static std::uint64_t derive_seed(std::uint64_t master_seed,
                                   std::initializer_list<std::uint64_t> keys);

  // Uniform on [0, 1).
  double uniform();
  // Uniform integer on [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  double normal(double mean, double sd);
  double gamma(double shape, double scale);
  bool bernoulli(double p);
  std::uint64_t next_seed() { return engine_(); }

  engine_type& engine() { return engine_; }

 private:
  engine_type engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace amimpute
