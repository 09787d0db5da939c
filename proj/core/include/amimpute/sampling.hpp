#pragma once

#include "amimpute/population.hpp"
#include "amimpute/rng.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace amimpute {

struct StratumDesign {
  std::size_t population_size = 0;  // N_h
  std::size_t sample_size = 0;      // n_h
};

// A without-replacement sample. Parallel vectors are indexed by sample position.
struct Sample {
  std::vector<std::size_t> units;   // population row indices, no duplicates
  std::vector<double> pi;           // first-order inclusion probabilities
  std::vector<double> weights;      // design weights 1 / pi
  std::vector<int> stratum;         // 1..H per unit, empty for unstratified designs
  std::vector<StratumDesign> strata;  // strata[h - 1], empty for unstratified designs
  std::size_t population_size = 0;

  std::size_t size() const { return units.size(); }
  bool stratified() const { return !strata.empty(); }
};

struct StrataAssignment {
  std::vector<int> labels;         // one per population unit, 1..H
  std::vector<std::size_t> sizes;  // sizes[h - 1] = N_h
  int count = 0;                   // H
};

// n distinct indices from [0, N), uniformly over all subsets, in increasing order.
std::vector<std::size_t> draw_srswor_indices(std::size_t N, std::size_t n, Rng& rng);

// floor(value), plus one with probability equal to the fractional part.
std::size_t randomized_round(double value, Rng& rng);

Sample srswor(std::size_t N, std::size_t n, Rng& rng);

// Recursive median splits over the listed covariates: 2^vars.size() strata.
StrataAssignment stratify_by_medians(const Population& pop, std::span<const std::size_t> vars);

Sample stratified_sample(const StrataAssignment& strata, double rate, Rng& rng);

double horvitz_thompson(const Sample& sample, std::span<const double> y_values);

void save_sample_csv(const Sample& sample, const std::filesystem::path& path);

}  // namespace amimpute
