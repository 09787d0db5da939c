#include "amimpute/additive_model.hpp"

#include "amimpute/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace amimpute {
namespace {

constexpr std::size_t kMinRows = 10;

std::size_t distinct_count(std::span<const double> x) {
  std::vector<double> v(x.begin(), x.end());
  std::sort(v.begin(), v.end());
  return static_cast<std::size_t>(std::unique(v.begin(), v.end()) - v.begin());
}

struct TermState {
  std::size_t covariate = 0;
  std::optional<PenalizedSmoother> smoother;
  PenalizedSmoother::Result result;
  std::vector<double> values;  // centered smooth at the training points
  double center = 0.0;
};

}  // namespace

std::vector<double> AmFit::lambdas() const {
  std::vector<double> out(covariates, std::numeric_limits<double>::quiet_NaN());
  for (const auto& t : terms) out[t.covariate] = t.smooth.lambda;
  return out;
}

AmFit fit_am(const Eigen::MatrixXd& X, std::span<const double> y, std::span<const double> weights,
             const AmOptions& options) {
  const auto n = static_cast<std::size_t>(X.rows());
  const auto q = static_cast<std::size_t>(X.cols());
  if (y.size() != n) throw DomainError("y must have one entry per row of X");
  if (!weights.empty() && weights.size() != n)
    throw DomainError("weights must have one entry per row of X");
  if (q == 0) throw DomainError("additive model needs at least one covariate");
  if (n < kMinRows)
    throw DegenerateFitError("additive model needs at least 10 rows, got " + std::to_string(n));
  if (!options.fixed_lambdas.empty() && options.fixed_lambdas.size() != q)
    throw DomainError("fixed_lambdas needs one value per covariate");
  if (options.fixed_lambdas.empty() && options.lambda_grid.empty())
    throw DomainError("lambda grid is empty");

  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  if (!weights.empty()) {
    double total = 0.0;
    for (double v : weights) total += v;
    for (std::size_t i = 0; i < n; ++i) w[i] = weights[i] / total;
  }

  AmFit fit;
  fit.covariates = q;
  fit.intercept = 0.0;
  for (std::size_t i = 0; i < n; ++i) fit.intercept += w[i] * y[i];

  std::vector<TermState> terms;
  for (std::size_t j = 0; j < q; ++j) {
    const std::span<const double> xj(X.col(static_cast<Eigen::Index>(j)).data(), n);
    if (distinct_count(xj) < static_cast<std::size_t>(SplineBasis::kOrder)) {
      fit.dropped.push_back(j);
      continue;
    }
    TermState t;
    t.covariate = j;
    t.smoother.emplace(build_basis(xj, options.basis_size), xj, weights);
    t.values.assign(n, 0.0);
    terms.push_back(std::move(t));
  }

  std::vector<double> total(n, 0.0);  // sum of smooths
  std::vector<double> previous(n), partial(n);
  const bool fixed = !options.fixed_lambdas.empty();

  auto objective = [&] {
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - fit.intercept - total[i];
      rss += w[i] * r * r;
    }
    double pen = 0.0;
    for (const auto& t : terms)
      pen += t.result.lambda * roughness(t.smoother->basis(), t.result.coefficients);
    return rss + pen;
  };

  fit.converged = terms.empty();
  for (int cycle = 1; cycle <= options.max_iter && !terms.empty(); ++cycle) {
    std::fill(total.begin(), total.end(), 0.0);
    for (const auto& t : terms)
      for (std::size_t i = 0; i < n; ++i) total[i] += t.values[i];
    for (std::size_t i = 0; i < n; ++i) previous[i] = fit.intercept + total[i];

    for (auto& t : terms) {
      for (std::size_t i = 0; i < n; ++i) {
        total[i] -= t.values[i];
        partial[i] = y[i] - fit.intercept - total[i];
      }
      if (fixed)
        t.result = t.smoother->fit(partial, options.fixed_lambdas[t.covariate]);
      else if (cycle <= options.reselect_cycles)
        t.result = t.smoother->select(partial, options.lambda_grid);
      else
        t.result = t.smoother->fit(partial, t.result.lambda);

      t.smoother->fitted(t.result.coefficients, t.values);
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean += w[i] * t.values[i];
      // B-splines sum to one, so shifting every coefficient shifts the function.
      t.result.coefficients.array() -= mean;
      t.center = mean;
      for (std::size_t i = 0; i < n; ++i) {
        t.values[i] -= mean;
        total[i] += t.values[i];
      }
    }

    fit.iterations = cycle;
    fit.objective_trace.push_back(objective());
    double diff = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double now = fit.intercept + total[i];
      diff += (now - previous[i]) * (now - previous[i]);
      norm += previous[i] * previous[i];
    }
    if (std::sqrt(diff) <= options.tol * std::max(std::sqrt(norm), 1e-300)) {
      fit.converged = true;
      break;
    }
  }

  fit.fitted.resize(static_cast<Eigen::Index>(n));
  std::fill(total.begin(), total.end(), 0.0);
  for (const auto& t : terms)
    for (std::size_t i = 0; i < n; ++i) total[i] += t.values[i];
  fit.residual_variance = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    fit.fitted(static_cast<Eigen::Index>(i)) = fit.intercept + total[i];
    const double r = y[i] - fit.fitted(static_cast<Eigen::Index>(i));
    fit.residual_variance += w[i] * r * r;
  }
  fit.terms.reserve(terms.size());
  for (const auto& t : terms)
    fit.terms.push_back({t.covariate, t.smoother->to_fit(t.result), t.center});
  return fit;
}

std::vector<double> predict_am(const AmFit& fit, const Eigen::MatrixXd& X_new) {
  if (static_cast<std::size_t>(X_new.cols()) != fit.covariates)
    throw DomainError("prediction matrix has " + std::to_string(X_new.cols()) +
                      " columns, model has " + std::to_string(fit.covariates));
  std::vector<double> out(static_cast<std::size_t>(X_new.rows()), fit.intercept);
  for (const auto& t : fit.terms) {
    const auto col = X_new.col(static_cast<Eigen::Index>(t.covariate));
    for (Eigen::Index i = 0; i < X_new.rows(); ++i) out[static_cast<std::size_t>(i)] += t.smooth(col(i));
  }
  return out;
}

}  // namespace amimpute
