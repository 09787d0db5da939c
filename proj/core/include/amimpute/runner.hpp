#pragma once

#include "amimpute/bootstrap.hpp"
#include "amimpute/config.hpp"
#include "amimpute/metrics.hpp"
#include "amimpute/population.hpp"
#include "amimpute/response.hpp"
#include "amimpute/sampling.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace amimpute {

struct ReplicateRecord {
  std::size_t index = 0;
  std::vector<ReplicateOutcome> outcomes;  // parallel to config.methods
  std::vector<std::string> fallbacks;      // parallel to config.methods
  int bootstrap_fallbacks = 0;
  double seconds = 0.0;
  bool failed = false;
  std::string error;
};

struct CellResult {
  std::string population;
  DesignKind design = DesignKind::Srswor;
  SimulationResult result;  // successful replicates only
  std::vector<ReplicateRecord> records;
  std::size_t failures = 0;
};

struct StudyResult {
  std::vector<CellResult> cells;
};

// A validated configuration with populations, strata and response models prepared.
// Each (population, design) pair is a cell; replicate l of a cell depends only on
// (seed, population, design, l).
class Experiment {
 public:
  explicit Experiment(ExperimentConfig config);

  const ExperimentConfig& config() const { return config_; }
  std::size_t cell_count() const;
  std::string cell_population(std::size_t cell) const;
  DesignKind cell_design(std::size_t cell) const;
  const Population& population(std::size_t cell) const;
  const LogisticResponseModel& response_model(std::size_t cell) const;

  ReplicateRecord run_replicate(std::size_t cell, std::size_t index, int inner_threads = 1) const;
  CellResult run_cell(std::size_t cell) const;
  StudyResult run() const;

 private:
  struct PreparedPopulation {
    std::string label;
    std::uint64_t key = 0;
    Population pop;
    double total = 0.0;
    LogisticResponseModel response;
    std::optional<StrataAssignment> strata;
  };

  ExperimentConfig config_;
  std::vector<PreparedPopulation> populations_;
};

StudyResult run_study(const ExperimentConfig& config);

// measures.csv, variance.csv (when B > 0), ranks.csv, replicates.csv and config.ini.
void write_results(const StudyResult& study, const ExperimentConfig& config,
                   const std::filesystem::path& dir);

StudyResult run_experiment(const ExperimentConfig& config);

}  // namespace amimpute
