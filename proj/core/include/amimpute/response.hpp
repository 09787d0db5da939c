#pragma once

#include "amimpute/population.hpp"
#include "amimpute/rng.hpp"
#include "amimpute/sampling.hpp"

#include <cstdint>
#include <vector>

namespace amimpute {

// p(x) = exp(b0 + b1 x) / (1 + exp(b0 + b1 x)) on one covariate.
struct LogisticResponseModel {
  double b0 = 0.0;
  double b1 = 1.0;
  std::size_t covariate_index = 0;

  double probability(double x) const;
  double mean_probability(const Population& pop) const;
};

struct ResponseSet {
  std::vector<std::uint8_t> responded;  // one per sample position

  std::size_t size() const { return responded.size(); }
  std::vector<std::size_t> respondents() const;
  std::vector<std::size_t> nonrespondents() const;
  std::size_t respondent_count() const;
};

// Solves for b0 so the population mean of p equals target_rate (within 1e-8).
LogisticResponseModel calibrate_intercept(const Population& pop, std::size_t covariate_index,
                                          double b1, double target_rate);

ResponseSet draw_response(const Sample& sample, const LogisticResponseModel& model,
                          const Population& pop, Rng& rng);

}  // namespace amimpute
