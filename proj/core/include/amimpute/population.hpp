#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace amimpute {

// Finite population: y and an N x q covariate matrix with entries in [0, 1].
struct Population {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  std::string y_name = "y";
  std::vector<std::string> x_names;

  std::size_t size() const { return static_cast<std::size_t>(y.size()); }
  std::size_t covariates() const { return static_cast<std::size_t>(X.cols()); }
  std::size_t covariate_index(const std::string& name) const;
};

inline constexpr int kSyntheticPopulations = 5;

// Mean function of synthetic population `pop_id` (1..5) at a covariate row x of length 4.
double synthetic_mean(int pop_id, std::span<const double> x);

// x1..x3 ~ U[0,1]; x4 ~ Gamma(3, 1/6) min-max rescaled; y = synthetic_mean + N(0, noise_sd^2).
Population generate_synthetic(int pop_id, std::size_t N, double noise_sd, std::uint64_t seed);

Population load_csv(const std::filesystem::path& path, const std::string& y_column,
                    const std::vector<std::string>& x_columns, bool rescale);
void save_csv(const Population& pop, const std::filesystem::path& path);

double population_total(const Population& pop);

// Maps a column to [0,1] by (v - min) / (max - min). A constant column maps to 0.
void rescale_unit_interval(Eigen::Ref<Eigen::VectorXd> column);

}  // namespace amimpute
