#pragma once

#include "amimpute/additive_model.hpp"
#include "amimpute/population.hpp"
#include "amimpute/response.hpp"
#include "amimpute/sampling.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace amimpute {

enum class ImputationMethod { Mean, Regression, NearestNeighbor, Additive };

std::string_view method_name(ImputationMethod method);  // mean, reg, nn, am
ImputationMethod parse_method(std::string_view name);

// Sample-level data handed to an imputation method. Rows are sample positions.
struct ImputationProblem {
  Eigen::MatrixXd X;
  std::vector<double> y;  // entries of nonrespondents are ignored
  std::vector<std::uint8_t> responded;
  std::vector<double> weights;  // design weights, empty for unweighted fitting

  std::size_t size() const { return responded.size(); }
  std::size_t respondent_count() const;
};

ImputationProblem make_problem(const Population& pop, const Sample& sample,
                               const ResponseSet& response, bool weighted);

struct ImputedDataset {
  std::vector<double> values;  // observed y for respondents, imputed y* otherwise
  ImputationMethod method = ImputationMethod::Mean;
  std::string fallback;          // empty when the requested method was used
  std::vector<double> lambdas;   // AM only

  bool used_fallback() const { return !fallback.empty(); }
};

ImputedDataset impute_mean(const ImputationProblem& problem);
ImputedDataset impute_regression(const ImputationProblem& problem);
ImputedDataset impute_nearest_neighbor(const ImputationProblem& problem);
ImputedDataset impute_am(const ImputationProblem& problem, const AmOptions& options = {});
ImputedDataset impute(ImputationMethod method, const ImputationProblem& problem,
                      const AmOptions& options = {});

// Weighted least squares of y on (1, x) over respondents. Throws DegenerateFitError when
// the normal equations stay singular after a 1e-10 * trace ridge.
Eigen::VectorXd regression_coefficients(const ImputationProblem& problem);

// sum_i y~_i / pi_i
double imputed_total(const Sample& sample, const ImputedDataset& imputed);

}  // namespace amimpute
