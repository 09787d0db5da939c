#include "amimpute/rng.hpp"

#include "amimpute/error.hpp"

namespace amimpute {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) {
  // Expand through a seed_seq so nearby seeds give unrelated MT states.
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  engine_.seed(seq);
}

std::uint64_t Rng::derive_seed(std::uint64_t master_seed,
                               std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = splitmix64(master_seed);
  for (std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

Rng Rng::stream(std::uint64_t master_seed, std::initializer_list<std::uint64_t> keys) {
  return Rng(derive_seed(master_seed, keys));
}

double Rng::uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw DomainError("Rng::below requires n > 0");
  return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
}

double Rng::normal(double mean, double sd) {
  if (sd == 0.0) return mean;
  return std::normal_distribution<double>(mean, sd)(engine_);
}

double Rng::gamma(double shape, double scale) {
  return std::gamma_distribution<double>(shape, scale)(engine_);
}

bool Rng::bernoulli(double p) { return uniform() < p; }

}  // namespace amimpute
