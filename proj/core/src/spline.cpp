#include "amimpute/spline.hpp"

#include "amimpute/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace amimpute {
namespace {

double safe_inverse(double d) { return d > 0.0 ? 1.0 / d : 0.0; }

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

SplineBasis::SplineBasis(std::vector<double> interior_knots) {
  double prev = 0.0;
  for (double k : interior_knots) {
    if (!(k > prev && k < 1.0))
      throw DomainError("interior knots must be strictly increasing inside (0, 1)");
    prev = k;
  }
  knots_.assign(kOrder, 0.0);
  knots_.insert(knots_.end(), interior_knots.begin(), interior_knots.end());
  knots_.insert(knots_.end(), kOrder, 1.0);
  dimension_ = static_cast<int>(knots_.size()) - kOrder;
  build_penalty();
}

std::vector<double> SplineBasis::interior_knots() const {
  return {knots_.begin() + kOrder, knots_.end() - kOrder};
}

int SplineBasis::span_index(double x) const {
  const auto first = knots_.begin() + kOrder;
  const auto last = knots_.begin() + dimension_;
  const auto it = std::upper_bound(first, last, x);
  return static_cast<int>(it - knots_.begin()) - 1;
}

std::array<std::array<double, SplineBasis::kOrder>, SplineBasis::kOrder> SplineBasis::triangle(
    int span, double x) const {
  std::array<std::array<double, kOrder>, kOrder> table{};
  table[0][0] = 1.0;
  const auto& t = knots_;
  for (int p = 1; p <= kDegree; ++p) {
    for (int r = 0; r <= p; ++r) {
      const int i = span - p + r;
      double value = 0.0;
      if (r >= 1) {
        const double left = table[p - 1][r - 1];
        value += (x - t[i]) * safe_inverse(t[i + p] - t[i]) * left;
      }
      if (r <= p - 1) {
        const double right = table[p - 1][r];
        value += (t[i + p + 1] - x) * safe_inverse(t[i + p + 1] - t[i + 1]) * right;
      }
      table[p][r] = value;
    }
  }
  return table;
}

BasisRow SplineBasis::evaluate(double x) const {
  x = clamp01(x);
  const int span = span_index(x);
  const auto table = triangle(span, x);
  BasisRow row;
  row.first = span - kDegree;
  for (int r = 0; r < kOrder; ++r) row.values[r] = table[kDegree][r];
  return row;
}

BasisRow SplineBasis::second_derivative(double x) const {
  x = clamp01(x);
  const int span = span_index(x);
  const auto table = triangle(span, x);
  const auto& t = knots_;
  // Linear B-splines N_{span-1,1} and N_{span,1} are the only nonzero ones.
  auto linear = [&](int i) {
    if (i == span - 1) return table[1][0];
    if (i == span) return table[1][1];
    return 0.0;
  };
  auto quadratic_slope = [&](int i) {
    return 2.0 * (linear(i) * safe_inverse(t[i + 2] - t[i]) -
                  linear(i + 1) * safe_inverse(t[i + 3] - t[i + 1]));
  };
  BasisRow row;
  row.first = span - kDegree;
  for (int r = 0; r < kOrder; ++r) {
    const int j = row.first + r;
    row.values[r] = 3.0 * (quadratic_slope(j) * safe_inverse(t[j + 3] - t[j]) -
                           quadratic_slope(j + 1) * safe_inverse(t[j + 4] - t[j + 1]));
  }
  return row;
}

void SplineBasis::build_penalty() {
  penalty_ = Eigen::MatrixXd::Zero(dimension_, dimension_);
  // b'' is linear on each knot interval, so the 2-point Gauss rule is exact for b_k'' b_l''.
  const double offset = 1.0 / std::sqrt(3.0);
  for (int s = kDegree; s < dimension_; ++s) {
    const double a = knots_[s], b = knots_[s + 1];
    if (!(b > a)) continue;
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (double node : {mid - half * offset, mid + half * offset}) {
      const BasisRow d2 = second_derivative(node);
      for (int r = 0; r < kOrder; ++r)
        for (int c = r; c < kOrder; ++c)
          penalty_(d2.first + r, d2.first + c) += half * d2.values[r] * d2.values[c];
    }
  }
  penalty_.triangularView<Eigen::StrictlyLower>() = penalty_.transpose();
}

Eigen::MatrixXd SplineBasis::design_matrix(std::span<const double> x) const {
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(x.size()), dimension_);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const BasisRow row = evaluate(x[i]);
    for (int r = 0; r < kOrder; ++r) B(static_cast<Eigen::Index>(i), row.first + r) = row.values[r];
  }
  return B;
}

SplineBasis build_basis(std::span<const double> x_values, int K) {
  if (K < SplineBasis::kOrder) throw DomainError("basis dimension must be at least 4");
  std::vector<double> distinct;
  distinct.reserve(x_values.size());
  for (double v : x_values) distinct.push_back(clamp01(v));
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < static_cast<std::size_t>(SplineBasis::kOrder))
    throw DegenerateFitError("spline basis needs at least 4 distinct covariate values, got " +
                             std::to_string(distinct.size()));
  const int dim = std::min<int>(K, static_cast<int>(distinct.size()));
  const int n_interior = dim - SplineBasis::kOrder;
  std::vector<double> interior;
  interior.reserve(static_cast<std::size_t>(n_interior));
  const double last = static_cast<double>(distinct.size() - 1);
  for (int j = 1; j <= n_interior; ++j) {
    const double pos = last * j / (n_interior + 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(lo);
    const double q = lo + 1 < distinct.size()
                         ? distinct[lo] + frac * (distinct[lo + 1] - distinct[lo])
                         : distinct[lo];
    interior.push_back(q);
  }
  return SplineBasis(std::move(interior));
}

double SplineFit::operator()(double x) const {
  const BasisRow row = basis.evaluate(x);
  double v = 0.0;
  for (int r = 0; r < SplineBasis::kOrder; ++r) v += row.values[r] * coefficients(row.first + r);
  return v;
}

std::vector<double> predict_spline(const SplineFit& fit, std::span<const double> x_new) {
  std::vector<double> out;
  out.reserve(x_new.size());
  for (double x : x_new) out.push_back(fit(x));
  return out;
}

double roughness(const SplineBasis& basis, const Eigen::VectorXd& coefficients) {
  return coefficients.dot(basis.penalty() * coefficients);
}

std::vector<double> log_grid(double lo, double hi, int count) {
  if (!(lo > 0.0 && hi >= lo) || count < 1) throw DomainError("invalid log grid");
  if (count == 1) return {lo};
  std::vector<double> grid(static_cast<std::size_t>(count));
  const double a = std::log10(lo), b = std::log10(hi);
  for (int i = 0; i < count; ++i) grid[i] = std::pow(10.0, a + (b - a) * i / (count - 1));
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

std::vector<double> default_lambda_grid() { return log_grid(1e-8, 1e4, 40); }

PenalizedSmoother::PenalizedSmoother(SplineBasis basis, std::span<const double> x,
                                     std::span<const double> weights)
    : basis_(std::move(basis)) {
  const std::size_t n = x.size();
  if (n < 2) throw DomainError("penalized spline fit needs at least 2 points");
  if (!weights.empty() && weights.size() != n)
    throw DomainError("weights must match the number of points");

  weights_.resize(n);
  if (weights.empty()) {
    std::fill(weights_.begin(), weights_.end(), 1.0 / static_cast<double>(n));
  } else {
    double total = 0.0;
    for (double w : weights) {
      if (!(w > 0.0) || !std::isfinite(w)) throw DomainError("weights must be positive");
      total += w;
    }
    for (std::size_t i = 0; i < n; ++i) weights_[i] = weights[i] / total;
  }

  const int K = basis_.dimension();
  rows_.reserve(n);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(K, K);
  for (std::size_t i = 0; i < n; ++i) {
    rows_.push_back(basis_.evaluate(x[i]));
    const BasisRow& row = rows_.back();
    for (int r = 0; r < SplineBasis::kOrder; ++r)
      for (int c = 0; c < SplineBasis::kOrder; ++c)
        gram(row.first + r, row.first + c) += weights_[i] * row.values[r] * row.values[c];
  }

  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) {
    Eigen::MatrixXd ridged = gram;
    ridged.diagonal().array() += 1e-10 * gram.trace();
    llt.compute(ridged);
    if (llt.info() != Eigen::Success)
      throw NumericalError("spline normal equations are singular after ridge");
  }

  // A = L^{-1} Omega L^{-T}
  const auto L = llt.matrixL();
  Eigen::MatrixXd half = L.solve(basis_.penalty());
  Eigen::MatrixXd reduced = L.solve(half.transpose());
  reduced = 0.5 * (reduced + reduced.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(reduced);
  if (eig.info() != Eigen::Success) throw NumericalError("penalty eigendecomposition failed");
  eigenvalues_ = eig.eigenvalues().cwiseMax(0.0);
  // Omega has exactly two null directions (constants and lines); remove roundoff there.
  eigenvalues_.head(SplineBasis::kNullSpaceDimension).setZero();
  transform_ = llt.matrixU().solve(eig.eigenvectors());
}

PenalizedSmoother::Projection PenalizedSmoother::project(std::span<const double> y) const {
  if (y.size() != rows_.size()) throw DomainError("y must match the number of points");
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(basis_.dimension());
  double yy = 0.0;
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const double wy = weights_[i] * y[i];
    yy += wy * y[i];
    const BasisRow& row = rows_[i];
    for (int r = 0; r < SplineBasis::kOrder; ++r) rhs(row.first + r) += wy * row.values[r];
  }
  return {transform_.transpose() * rhs, yy};
}

PenalizedSmoother::Result PenalizedSmoother::evaluate(const Projection& p, double lambda) const {
  const auto K = eigenvalues_.size();
  Eigen::VectorXd shrunk(K);
  double edf = 0.0, explained = 0.0;
  for (Eigen::Index k = 0; k < K; ++k) {
    const double f = 1.0 / (1.0 + lambda * eigenvalues_(k));
    edf += f;
    shrunk(k) = f * p.z(k);
    explained += p.z(k) * p.z(k) * f * (2.0 - f);
  }
  Result out;
  out.lambda = lambda;
  out.coefficients = transform_ * shrunk;
  out.edf = edf;
  out.rss = std::max(0.0, p.yy - explained);
  const double n = static_cast<double>(rows_.size());
  const double dof = n - edf;
  out.gcv = dof > 0.0 ? n * n * out.rss / (dof * dof) : std::numeric_limits<double>::infinity();
  return out;
}

PenalizedSmoother::Result PenalizedSmoother::fit(std::span<const double> y, double lambda) const {
  if (!(lambda >= 0.0)) throw DomainError("lambda must be nonnegative");
  return evaluate(project(y), lambda);
}

double PenalizedSmoother::edf(double lambda) const {
  double s = 0.0;
  for (Eigen::Index k = 0; k < eigenvalues_.size(); ++k) s += 1.0 / (1.0 + lambda * eigenvalues_(k));
  return s;
}

PenalizedSmoother::Result PenalizedSmoother::select(std::span<const double> y,
                                                    std::span<const double> grid) const {
  if (grid.empty()) throw DomainError("lambda grid is empty");
  const Projection p = project(y);
  std::vector<Result> results;
  results.reserve(grid.size());
  double best = std::numeric_limits<double>::infinity();
  for (double lambda : grid) {
    if (!(lambda >= 0.0)) throw DomainError("lambda must be nonnegative");
    results.push_back(evaluate(p, lambda));
    best = std::min(best, results.back().gcv);
  }
  if (!std::isfinite(best)) throw NumericalError("GCV undefined: trace of hat matrix >= n");
  const double tie = best + 1e-9 * best + 1e-12 * p.yy;
  std::size_t chosen = grid.size();
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].gcv > tie) continue;
    if (chosen == grid.size() || results[i].lambda > results[chosen].lambda) chosen = i;
  }
  return results[chosen];
}

void PenalizedSmoother::fitted(const Eigen::VectorXd& coefficients, std::span<double> out) const {
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const BasisRow& row = rows_[i];
    double v = 0.0;
    for (int r = 0; r < SplineBasis::kOrder; ++r) v += row.values[r] * coefficients(row.first + r);
    out[i] = v;
  }
}

SplineFit PenalizedSmoother::to_fit(const Result& result) const {
  return SplineFit{basis_, result.coefficients, result.lambda, result.edf, result.rss, result.gcv};
}

SplineFit fit_pls(const SplineBasis& basis, std::span<const double> x, std::span<const double> y,
                  std::span<const double> weights, double lambda) {
  if (x.size() != y.size()) throw DomainError("x and y lengths differ");
  PenalizedSmoother smoother(basis, x, weights);
  return smoother.to_fit(smoother.fit(y, lambda));
}

SplineFit gcv_select(const SplineBasis& basis, std::span<const double> x,
                     std::span<const double> y, std::span<const double> weights,
                     std::span<const double> grid) {
  if (x.size() != y.size()) throw DomainError("x and y lengths differ");
  PenalizedSmoother smoother(basis, x, weights);
  return smoother.to_fit(smoother.select(y, grid));
}

}  // namespace amimpute
