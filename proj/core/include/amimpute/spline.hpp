#pragma once

#include <Eigen/Dense>

#include <array>
#include <span>
#include <vector>

namespace amimpute {

// Nonzero cubic B-spline values at one point: functions first..first+3.
struct BasisRow {
  int first = 0;
  std::array<double, 4> values{};
};

// Cubic B-spline basis on [0,1] with the integrated squared second derivative
// penalty Omega(k,l) = int_0^1 b_k''(t) b_l''(t) dt.
class SplineBasis {
 public:
  static constexpr int kDegree = 3;
  static constexpr int kOrder = kDegree + 1;
  static constexpr int kNullSpaceDimension = 2;

  // interior_knots must be strictly increasing inside (0, 1).
  explicit SplineBasis(std::vector<double> interior_knots);

  int dimension() const { return dimension_; }
  const std::vector<double>& knots() const { return knots_; }
  std::vector<double> interior_knots() const;
  const Eigen::MatrixXd& penalty() const { return penalty_; }

  // Points outside [0,1] are clamped.
  BasisRow evaluate(double x) const;
  BasisRow second_derivative(double x) const;
  Eigen::MatrixXd design_matrix(std::span<const double> x) const;

 private:
  int span_index(double x) const;
  // Cox-de Boor triangle: table[p][r] = N_{span-p+r, p}(x).
  std::array<std::array<double, kOrder>, kOrder> triangle(int span, double x) const;
  void build_penalty();

  std::vector<double> knots_;
  int dimension_ = 0;
  Eigen::MatrixXd penalty_;
};

// Interior knots at empirical quantiles of the distinct x values. The dimension
// is reduced to the number of distinct values when fewer than K exist; fewer
// than 4 distinct values throws DegenerateFitError.
SplineBasis build_basis(std::span<const double> x_values, int K);

struct SplineFit {
  SplineBasis basis;
  Eigen::VectorXd coefficients;
  double lambda = 0.0;
  double edf = 0.0;
  double rss = 0.0;  // weighted mean squared residual, weights normalized to sum 1
  double gcv_score = 0.0;

  double operator()(double x) const;
};

std::vector<double> predict_spline(const SplineFit& fit, std::span<const double> x_new);

// Quadratic form c' Omega c = int (g'')^2 for g = sum_k c_k b_k.
double roughness(const SplineBasis& basis, const Eigen::VectorXd& coefficients);

// n log-spaced values from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, int count);
std::vector<double> default_lambda_grid();

// Penalized least squares for a fixed basis, design points and weights.
//
// Minimizes sum_i w_i (y_i - g(x_i))^2 / sum_j w_j + lambda * c' Omega c.
// Everything that does not depend on y or lambda is factored once: with
// M = B'WB = L L' and L^{-1} Omega L^{-T} = U S U', the solution is
// c = T (I + lambda S)^{-1} T' B'Wy with T = L^{-T} U, so each lambda costs O(K).
class PenalizedSmoother {
 public:
  struct Result {
    Eigen::VectorXd coefficients;
    double lambda = 0.0;
    double edf = 0.0;
    double rss = 0.0;
    double gcv = 0.0;
  };

  // weights empty means unweighted.
  PenalizedSmoother(SplineBasis basis, std::span<const double> x, std::span<const double> weights);

  std::size_t size() const { return rows_.size(); }
  const SplineBasis& basis() const { return basis_; }
  const std::vector<double>& normalized_weights() const { return weights_; }

  Result fit(std::span<const double> y, double lambda) const;
  // Minimizes GCV over the grid; near-ties go to the largest lambda.
  Result select(std::span<const double> y, std::span<const double> grid) const;
  double edf(double lambda) const;

  // B c at the training points.
  void fitted(const Eigen::VectorXd& coefficients, std::span<double> out) const;

  SplineFit to_fit(const Result& result) const;

 private:
  struct Projection {
    Eigen::VectorXd z;   // T' B'Wy
    double yy = 0.0;     // y'Wy
  };
  Projection project(std::span<const double> y) const;
  Result evaluate(const Projection& p, double lambda) const;

  SplineBasis basis_;
  std::vector<BasisRow> rows_;
  std::vector<double> weights_;  // normalized to sum 1
  Eigen::MatrixXd transform_;    // T
  Eigen::VectorXd eigenvalues_;  // S, two smallest forced to 0
};

SplineFit fit_pls(const SplineBasis& basis, std::span<const double> x, std::span<const double> y,
                  std::span<const double> weights, double lambda);
SplineFit gcv_select(const SplineBasis& basis, std::span<const double> x,
                     std::span<const double> y, std::span<const double> weights,
                     std::span<const double> grid);

}  // namespace amimpute
