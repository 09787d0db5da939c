#include "amimpute/imputation.hpp"

#include "amimpute/error.hpp"

#include <cmath>
#include <limits>

namespace amimpute {
namespace {

double weight_of(const ImputationProblem& p, std::size_t i) {
  return p.weights.empty() ? 1.0 : p.weights[i];
}

void check_problem(const ImputationProblem& p) {
  const std::size_t n = p.size();
  if (p.y.size() != n || static_cast<std::size_t>(p.X.rows()) != n)
    throw DomainError("imputation problem has inconsistent lengths");
  if (!p.weights.empty() && p.weights.size() != n)
    throw DomainError("imputation weights must have one entry per unit");
  if (p.respondent_count() == 0) throw NoRespondentsError();
}

ImputedDataset start(const ImputationProblem& p, ImputationMethod method) {
  ImputedDataset out;
  out.method = method;
  out.values.resize(p.size());
  for (std::size_t i = 0; i < p.size(); ++i)
    out.values[i] = p.responded[i] ? p.y[i] : std::numeric_limits<double>::quiet_NaN();
  return out;
}

}  // namespace

std::string_view method_name(ImputationMethod method) {
  switch (method) {
    case ImputationMethod::Mean: return "mean";
    case ImputationMethod::Regression: return "reg";
    case ImputationMethod::NearestNeighbor: return "nn";
    case ImputationMethod::Additive: return "am";
  }
  return "unknown";
}

ImputationMethod parse_method(std::string_view name) {
  if (name == "mean") return ImputationMethod::Mean;
  if (name == "reg" || name == "regression") return ImputationMethod::Regression;
  if (name == "nn" || name == "nearest") return ImputationMethod::NearestNeighbor;
  if (name == "am" || name == "additive") return ImputationMethod::Additive;
  throw DomainError("unknown imputation method '" + std::string(name) + "'");
}

std::size_t ImputationProblem::respondent_count() const {
  std::size_t c = 0;
  for (auto r : responded) c += r ? 1 : 0;
  return c;
}

ImputationProblem make_problem(const Population& pop, const Sample& sample,
                               const ResponseSet& response, bool weighted) {
  if (response.size() != sample.size()) throw DomainError("response set does not match sample");
  ImputationProblem p;
  const auto n = static_cast<Eigen::Index>(sample.size());
  p.X.resize(n, pop.X.cols());
  p.y.resize(sample.size());
  p.responded = response.responded;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto u = static_cast<Eigen::Index>(sample.units[static_cast<std::size_t>(i)]);
    p.X.row(i) = pop.X.row(u);
    p.y[static_cast<std::size_t>(i)] =
        p.responded[static_cast<std::size_t>(i)] ? pop.y(u) : std::numeric_limits<double>::quiet_NaN();
  }
  if (weighted) p.weights = sample.weights;
  return p;
}

ImputedDataset impute_mean(const ImputationProblem& problem) {
  check_problem(problem);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < problem.size(); ++i) {
    if (!problem.responded[i]) continue;
    const double w = weight_of(problem, i);
    num += w * problem.y[i];
    den += w;
  }
  const double mean = num / den;
  ImputedDataset out = start(problem, ImputationMethod::Mean);
  for (std::size_t i = 0; i < problem.size(); ++i)
    if (!problem.responded[i]) out.values[i] = mean;
  return out;
}

Eigen::VectorXd regression_coefficients(const ImputationProblem& problem) {
  check_problem(problem);
  const Eigen::Index p = problem.X.cols() + 1;
  if (static_cast<Eigen::Index>(problem.respondent_count()) < p)
    throw DegenerateFitError("fewer respondents than regression coefficients");
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd z(p);
  for (std::size_t i = 0; i < problem.size(); ++i) {
    if (!problem.responded[i]) continue;
    const double w = weight_of(problem, i);
    z(0) = 1.0;
    z.tail(p - 1) = problem.X.row(static_cast<Eigen::Index>(i)).transpose();
    A.selfadjointView<Eigen::Lower>().rankUpdate(z, w);
    b += w * problem.y[i] * z;
  }
  A = A.selfadjointView<Eigen::Lower>();

  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-13) {
    Eigen::MatrixXd ridged = A;
    ridged.diagonal().array() += 1e-10 * A.trace();
    llt.compute(ridged);
    if (llt.info() != Eigen::Success || llt.rcond() < 1e-13)
      throw DegenerateFitError("regression normal equations are singular after ridge");
  }
  return llt.solve(b);
}

ImputedDataset impute_regression(const ImputationProblem& problem) {
  check_problem(problem);
  Eigen::VectorXd beta;
  try {
    beta = regression_coefficients(problem);
  } catch (const DegenerateFitError&) {
    ImputedDataset out = impute_mean(problem);
    out.method = ImputationMethod::Regression;
    out.fallback = "reg->mean";
    return out;
  }
  ImputedDataset out = start(problem, ImputationMethod::Regression);
  for (std::size_t i = 0; i < problem.size(); ++i) {
    if (problem.responded[i]) continue;
    out.values[i] = beta(0) + problem.X.row(static_cast<Eigen::Index>(i)).dot(beta.tail(beta.size() - 1));
  }
  return out;
}

ImputedDataset impute_nearest_neighbor(const ImputationProblem& problem) {
  check_problem(problem);
  std::vector<std::size_t> donors;
  for (std::size_t i = 0; i < problem.size(); ++i)
    if (problem.responded[i]) donors.push_back(i);
  // Row-major copy of donor covariates for a cache-friendly scan.
  const auto q = static_cast<std::size_t>(problem.X.cols());
  std::vector<double> donor_x(donors.size() * q);
  for (std::size_t d = 0; d < donors.size(); ++d)
    for (std::size_t j = 0; j < q; ++j)
      donor_x[d * q + j] = problem.X(static_cast<Eigen::Index>(donors[d]), static_cast<Eigen::Index>(j));

  ImputedDataset out = start(problem, ImputationMethod::NearestNeighbor);
  std::vector<double> xi(q);
  for (std::size_t i = 0; i < problem.size(); ++i) {
    if (problem.responded[i]) continue;
    for (std::size_t j = 0; j < q; ++j)
      xi[j] = problem.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_donor = 0;
    // Strict comparison keeps the lowest-index donor among ties.
    for (std::size_t d = 0; d < donors.size(); ++d) {
      const double* row = &donor_x[d * q];
      double dist = 0.0;
      for (std::size_t j = 0; j < q; ++j) {
        const double diff = row[j] - xi[j];
        dist += diff * diff;
      }
      if (dist < best) {
        best = dist;
        best_donor = d;
      }
    }
    out.values[i] = problem.y[donors[best_donor]];
  }
  return out;
}

ImputedDataset impute_am(const ImputationProblem& problem, const AmOptions& options) {
  check_problem(problem);
  std::vector<std::size_t> resp, miss;
  for (std::size_t i = 0; i < problem.size(); ++i) (problem.responded[i] ? resp : miss).push_back(i);

  Eigen::MatrixXd Xr(static_cast<Eigen::Index>(resp.size()), problem.X.cols());
  std::vector<double> yr(resp.size()), wr;
  for (std::size_t k = 0; k < resp.size(); ++k) {
    Xr.row(static_cast<Eigen::Index>(k)) = problem.X.row(static_cast<Eigen::Index>(resp[k]));
    yr[k] = problem.y[resp[k]];
  }
  if (!problem.weights.empty()) {
    wr.reserve(resp.size());
    for (auto i : resp) wr.push_back(problem.weights[i]);
  }

  auto degrade = [&] {
    ImputedDataset out = impute_regression(problem);
    out.method = ImputationMethod::Additive;
    out.fallback = out.fallback.empty() ? "am->reg" : "am->" + out.fallback;
    return out;
  };
  AmFit fit;
  try {
    fit = fit_am(Xr, yr, wr, options);
  } catch (const DegenerateFitError&) {
    return degrade();
  } catch (const NumericalError&) {
    return degrade();
  }

  Eigen::MatrixXd Xm(static_cast<Eigen::Index>(miss.size()), problem.X.cols());
  for (std::size_t k = 0; k < miss.size(); ++k)
    Xm.row(static_cast<Eigen::Index>(k)) = problem.X.row(static_cast<Eigen::Index>(miss[k]));
  const auto pred = predict_am(fit, Xm);

  ImputedDataset out = start(problem, ImputationMethod::Additive);
  for (std::size_t k = 0; k < miss.size(); ++k) out.values[miss[k]] = pred[k];
  out.lambdas = fit.lambdas();
  return out;
}

ImputedDataset impute(ImputationMethod method, const ImputationProblem& problem,
                      const AmOptions& options) {
  switch (method) {
    case ImputationMethod::Mean: return impute_mean(problem);
    case ImputationMethod::Regression: return impute_regression(problem);
    case ImputationMethod::NearestNeighbor: return impute_nearest_neighbor(problem);
    case ImputationMethod::Additive: return impute_am(problem, options);
  }
  throw DomainError("unknown imputation method");
}

double imputed_total(const Sample& sample, const ImputedDataset& imputed) {
  if (imputed.values.size() != sample.size())
    throw DomainError("imputed values do not match the sample");
  double total = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) total += imputed.values[i] / sample.pi[i];
  return total;
}

}  // namespace amimpute
