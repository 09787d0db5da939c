#pragma once

#include "amimpute/additive_model.hpp"
#include "amimpute/imputation.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace amimpute {

enum class DesignKind { Srswor, Stratified };

std::string_view design_name(DesignKind kind);  // srswor, ss
DesignKind parse_design(std::string_view name);

struct PopulationSpec {
  std::vector<int> synthetic_ids{1};
  std::size_t size = 10000;
  double noise_sd = 0.1;
  // A CSV population replaces the synthetic ones when set.
  std::filesystem::path csv;
  std::string y_column = "y";
  std::vector<std::string> x_columns;
  bool rescale = true;
};

struct DesignSpec {
  std::vector<DesignKind> kinds{DesignKind::Srswor};
  double rate = 0.2;
  std::vector<std::string> strata_vars{"x1", "x2", "x3", "x4"};
};

struct ResponseSpec {
  std::string covariate = "x1";
  double b1 = 1.0;
  double target_rate = 0.75;
  std::optional<double> b0;  // skips calibration
};

struct ExperimentConfig {
  PopulationSpec population;
  DesignSpec design;
  ResponseSpec response;
  std::vector<ImputationMethod> methods{ImputationMethod::Regression, ImputationMethod::Mean,
                                        ImputationMethod::NearestNeighbor,
                                        ImputationMethod::Additive};
  bool weighted_mean = true;
  bool weighted_regression = true;
  bool weighted_am = true;
  int replicates = 1000;           // L
  int bootstrap_replicates = 0;    // B, 0 disables variance estimation
  std::string n_prime_rule = "f*n_h";
  AmOptions spline;
  double lambda_min = 1e-8;
  double lambda_max = 1e4;
  int lambda_count = 40;
  std::uint64_t seed = 20170101;
  int threads = 1;
  std::filesystem::path output_dir = "results";
  double failure_budget = 0.01;

  bool weighted(ImputationMethod method) const;
  // spline options with lambda_grid rebuilt from lambda_min/max/count
  AmOptions am_options() const;
};

// INI text: [section] headers and key = value lines.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string to_ini(const ExperimentConfig& config);

// Every violated constraint, keyed by section.key. Column existence is checked
// against the CSV header when a CSV population is configured.
std::vector<std::string> validate_config(const ExperimentConfig& config);

}  // namespace amimpute
