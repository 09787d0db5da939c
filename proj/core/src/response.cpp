#include "amimpute/response.hpp"

#include "amimpute/error.hpp"

#include <cmath>

namespace amimpute {

double LogisticResponseModel::probability(double x) const {
  const double eta = b0 + b1 * x;
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double LogisticResponseModel::mean_probability(const Population& pop) const {
  const auto col = pop.X.col(static_cast<Eigen::Index>(covariate_index));
  double s = 0.0;
  for (Eigen::Index i = 0; i < col.size(); ++i) s += probability(col(i));
  return s / static_cast<double>(col.size());
}

std::vector<std::size_t> ResponseSet::respondents() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < responded.size(); ++i)
    if (responded[i]) out.push_back(i);
  return out;
}

std::vector<std::size_t> ResponseSet::nonrespondents() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < responded.size(); ++i)
    if (!responded[i]) out.push_back(i);
  return out;
}

std::size_t ResponseSet::respondent_count() const {
  std::size_t c = 0;
  for (auto r : responded) c += r ? 1 : 0;
  return c;
}

LogisticResponseModel calibrate_intercept(const Population& pop, std::size_t covariate_index,
                                          double b1, double target_rate) {
  if (!(target_rate > 0.0 && target_rate < 1.0))
    throw DomainError("target response rate must lie in (0, 1)");
  if (covariate_index >= pop.covariates()) throw DomainError("response covariate out of range");
  if (!pop.X.col(static_cast<Eigen::Index>(covariate_index)).allFinite())
    throw DomainError("response covariate has non-finite values");

  LogisticResponseModel model{0.0, b1, covariate_index};
  auto mean_at = [&](double b0) {
    model.b0 = b0;
    return model.mean_probability(pop);
  };
  // mean p is increasing in b0; widen until the target is bracketed.
  double lo = -1.0, hi = 1.0;
  for (int i = 0; i < 200 && mean_at(lo) > target_rate; ++i) lo *= 2.0;
  for (int i = 0; i < 200 && mean_at(hi) < target_rate; ++i) hi *= 2.0;
  if (mean_at(lo) > target_rate || mean_at(hi) < target_rate)
    throw NumericalError("could not bracket the response intercept");
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = lo + (hi - lo) / 2.0;
    if (mean_at(mid) < target_rate)
      lo = mid;
    else
      hi = mid;
  }
  const double b0 = lo + (hi - lo) / 2.0;
  if (std::abs(mean_at(b0) - target_rate) > 1e-8)
    throw NumericalError("response intercept calibration did not converge");
  model.b0 = b0;
  return model;
}

ResponseSet draw_response(const Sample& sample, const LogisticResponseModel& model,
                          const Population& pop, Rng& rng) {
  ResponseSet out;
  out.responded.resize(sample.size());
  const auto col = pop.X.col(static_cast<Eigen::Index>(model.covariate_index));
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const auto u = static_cast<Eigen::Index>(sample.units[i]);
    out.responded[i] = rng.bernoulli(model.probability(col(u))) ? 1 : 0;
  }
  return out;
}

}  // namespace amimpute
