#pragma once

#include "amimpute/imputation.hpp"
#include "amimpute/rng.hpp"
#include "amimpute/sampling.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace amimpute {

using ImputeFn = std::function<ImputedDataset(const ImputationProblem&)>;

struct BootstrapVariance {
  double variance = 0.0;  // (1/B) sum_b (T_b - mean)^2
  int replicates = 0;
  std::vector<double> replicate_totals;
  double mean_total = 0.0;
  int fallback_count = 0;  // replicates whose imputation fell back to a simpler method
  int redraws = 0;         // replicates redrawn because they had no respondents
};

// Variance with the 1/B divisor, from replicate totals.
BootstrapVariance summarize_replicates(std::vector<double> totals);

// Number of sample copies in the pseudopopulation: N/n rounded to nearest, ties to even.
std::size_t pseudopopulation_copies(std::size_t N, std::size_t n);

// k copies of the sample; unit u is a copy of sample position source[u] = u mod n.
struct Pseudopopulation {
  std::size_t copies = 0;
  std::vector<std::size_t> source;
  ImputationProblem units;
};

Pseudopopulation build_pseudopopulation(const Sample& sample, const ImputationProblem& data);

// Without-replacement bootstrap for SRSWOR: resample n units from k copies of the sample,
// re-impute, and total with (N/n) sum y~.
BootstrapVariance bwo_variance(const Sample& sample, const ImputationProblem& data,
                               const ImputeFn& impute_fn, int B, Rng& rng, int threads = 1);

// Subsample size rule for the mirror-match bootstrap.
struct NPrimeRule {
  enum class Kind { SamplingFraction, Fraction, Fixed };
  Kind kind = Kind::SamplingFraction;
  double value = 1.0;

  // "f*n_h" (f_h n_h), "<c>*n_h" (c n_h) or "<count>".
  static NPrimeRule parse(const std::string& text);
  std::string str() const;
  double evaluate(const StratumDesign& stratum) const;
};

struct MirrorMatchDraw {
  std::vector<std::size_t> positions;  // sample positions, with repeats across subsamples
  std::vector<double> weights;         // N / n* per drawn unit
  std::vector<std::size_t> subsample_sizes;  // realized n_h'
  std::vector<std::size_t> copies;           // realized k_h
  std::vector<std::size_t> stratum_sizes;    // n_h* = n_h' k_h
  std::size_t total_size = 0;                // n*
};

// Throws ConfigError when the rule gives n_h' < 1 or n_h' >= n_h in some stratum.
void check_n_prime_rule(const Sample& sample, const NPrimeRule& rule);

MirrorMatchDraw draw_mirror_match(const Sample& sample, const NPrimeRule& rule, Rng& rng);

BootstrapVariance mmb_variance(const Sample& sample, const ImputationProblem& data,
                               const ImputeFn& impute_fn, const NPrimeRule& rule, int B,
                               Rng& rng, int threads = 1);

// total -/+ z sqrt(variance) with z the standard normal quantile at (1 + level) / 2.
std::pair<double, double> confidence_interval(double total, double variance, double level);

}  // namespace amimpute
