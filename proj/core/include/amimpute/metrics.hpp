#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace amimpute {

struct ReplicateOutcome {
  double total = 0.0;
  double abs_rel_error_sum = 0.0;  // sum over nonrespondents of |(y* - y) / y|
  std::size_t predicted = 0;       // nonrespondents contributing to the sum
  std::size_t zero_y_excluded = 0;
  std::optional<double> boot_variance;
  bool fallback = false;
};

struct MethodResults {
  std::string method;
  std::vector<ReplicateOutcome> replicates;
};

struct SimulationResult {
  double true_total = 0.0;
  std::vector<MethodResults> methods;

  const MethodResults& method(const std::string& name) const;
};

struct PredictionErrors {
  double abs_rel_error_sum = 0.0;
  std::size_t predicted = 0;
  std::size_t zero_y_excluded = 0;
};

// Relative errors over the given units; units with y == 0 are counted and skipped.
PredictionErrors prediction_errors(std::span<const double> imputed, std::span<const double> truth);

double mrpe(const MethodResults& results);
double relative_bias(const MethodResults& results, double true_total);
double relative_root_variance(const MethodResults& results, double true_total);
double relative_rmse(const MethodResults& results, double true_total);
double monte_carlo_variance(const MethodResults& results);
std::size_t zero_y_excluded(const MethodResults& results);

struct EstimatorMeasures {
  double mrpe = 0.0;
  double rb = 0.0;
  double rrvar = 0.0;
  double rrmse = 0.0;
};
EstimatorMeasures measures(const MethodResults& results, double true_total);

struct BootstrapSummary {
  double var = 0.0;
  double var_boot = 0.0;
  double coverage = 0.0;
};
BootstrapSummary bootstrap_summary(const MethodResults& results, double true_total,
                                   double level = 0.95);

// Tie-averaged ranks, 1 for the smallest value.
std::vector<double> average_ranks(std::span<const double> values);

struct PopulationMeasures {
  std::string population;
  std::vector<std::string> methods;
  std::vector<EstimatorMeasures> values;  // parallel to methods
};

struct RankRow {
  std::string method;
  EstimatorMeasures ranks;  // average rank across populations; RB ranked on |RB|
};

// Methods must appear in the same order in every population.
std::vector<RankRow> rank_methods(std::span<const PopulationMeasures> populations);

}  // namespace amimpute
