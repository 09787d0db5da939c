#include "amimpute/error.hpp"
#include "amimpute/rng.hpp"
#include "amimpute/spline.hpp"
#include "doctest.h"
#include "oracles.hpp"

#include <cmath>
#include <numbers>

using namespace amimpute;

namespace {

std::vector<double> uniform_points(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = rng.uniform();
  return x;
}

std::vector<double> greville(const SplineBasis& basis) {
  const auto& t = basis.knots();
  std::vector<double> g(static_cast<std::size_t>(basis.dimension()));
  for (int k = 0; k < basis.dimension(); ++k) g[k] = (t[k + 1] + t[k + 2] + t[k + 3]) / 3.0;
  return g;
}

double pls_objective(const SplineBasis& basis, const std::vector<double>& x,
                     const std::vector<double>& y, const std::vector<double>& w, double lambda,
                     const Eigen::VectorXd& c) {
  const Eigen::MatrixXd B = basis.design_matrix(x);
  const Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(y.data(), y.size()) - B * c;
  double sw = 0, loss = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    sw += wi;
    loss += wi * r(i) * r(i);
  }
  return loss / sw + lambda * c.dot(basis.penalty() * c);
}

}  // namespace

TEST_CASE("basis with boundary knots only spans the cubics and has a 2-dim penalty null space") {
  const SplineBasis basis({});
  CHECK(basis.dimension() == 4);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(basis.penalty());
  const auto ev = eig.eigenvalues();
  CHECK(std::abs(ev(0)) < 1e-9 * ev(3));
  CHECK(std::abs(ev(1)) < 1e-9 * ev(3));
  CHECK(ev(2) > 1e-6 * ev(3));
  // t^3 = sum c_k B_k with c = (0, 0, 0, 1) on the Bernstein basis; its second derivative is 6t.
  Eigen::VectorXd cubic = Eigen::VectorXd::Zero(4);
  cubic(3) = 1.0;
  CHECK(roughness(basis, cubic) == doctest::Approx(12.0).epsilon(1e-12));
}

TEST_CASE("penalty matrix matches independent quadrature of b_k'' b_l''") {
  for (int K : {4, 7, 12}) {
    const auto x = uniform_points(300, 7 + K);
    const SplineBasis basis = build_basis(x, K);
    const auto& t = basis.knots();
    const auto breaks = oracle::distinct_knots(t);
    // 10^4 Simpson panels spread over the knot intervals.
    const int per = std::max(2, 10000 / static_cast<int>(breaks.size() - 1));
    double max_diff = 0.0;
    for (int k = 0; k < K; ++k)
      for (int l = k; l < K; ++l) {
        const double ref = oracle::integrate(breaks, per, [&](double s) {
          return oracle::bspline_derivative(t, k, 3, 2, s) * oracle::bspline_derivative(t, l, 3, 2, s);
        });
        max_diff = std::max(max_diff, std::abs(ref - basis.penalty()(k, l)));
      }
    CHECK(max_diff < 1e-8);
    CHECK((basis.penalty() - basis.penalty().transpose()).cwiseAbs().maxCoeff() == 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(basis.penalty());
    CHECK(eig.eigenvalues().minCoeff() >= -1e-10 * eig.eigenvalues().maxCoeff());
  }
}

TEST_CASE("penalty null space is spanned by constants and lines") {
  const auto x = uniform_points(500, 3);
  const SplineBasis basis = build_basis(x, 12);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(12);
  const auto g = greville(basis);
  const Eigen::VectorXd line = Eigen::Map<const Eigen::VectorXd>(g.data(), 12);
  const double scale = basis.penalty().cwiseAbs().maxCoeff();
  CHECK((basis.penalty() * ones).cwiseAbs().maxCoeff() < 1e-10 * scale);
  CHECK((basis.penalty() * line).cwiseAbs().maxCoeff() < 1e-10 * scale);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(basis.penalty());
  int null_dim = 0;
  for (auto v : eig.eigenvalues()) null_dim += std::abs(v) < 1e-9 * scale ? 1 : 0;
  CHECK(null_dim == 2);
}

TEST_CASE("basis values agree with the recursive definition and sum to one") {
  const auto x = uniform_points(400, 11);
  const SplineBasis basis = build_basis(x, 10);
  const auto& t = basis.knots();
  for (double s : {0.0, 0.013, 0.25, 0.5, 0.77, 0.999, 1.0}) {
    const BasisRow row = basis.evaluate(s);
    const BasisRow d2 = basis.second_derivative(s);
    double sum = 0.0;
    for (int r = 0; r < 4; ++r) {
      sum += row.values[r];
      CHECK(row.values[r] == doctest::Approx(oracle::bspline(t, row.first + r, 3, s)).epsilon(1e-12));
      if (s > 0.0 && s < 1.0)
        CHECK(d2.values[r] ==
              doctest::Approx(oracle::bspline_derivative(t, row.first + r, 3, 2, s)).epsilon(1e-9));
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
  }
  const Eigen::MatrixXd B = basis.design_matrix(x);
  CHECK((B.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-14);
}

TEST_CASE("build_basis places interior knots at quantiles and reduces K on sparse data") {
  std::vector<double> x;
  for (int i = 0; i < 100; ++i) x.push_back((i % 6) / 5.0);
  const SplineBasis reduced = build_basis(x, 12);
  CHECK(reduced.dimension() == 6);
  const auto interior = reduced.interior_knots();
  REQUIRE(interior.size() == 2);
  CHECK(interior[0] == doctest::Approx(1.0 / 3.0));
  CHECK(interior[1] == doctest::Approx(2.0 / 3.0));

  CHECK_THROWS_AS(build_basis(std::vector<double>{0.1, 0.2, 0.2, 0.3, 0.1}, 8), DegenerateFitError);
  CHECK_THROWS_AS(build_basis(x, 3), DomainError);
}

TEST_CASE("exactly linear data is reproduced for every lambda") {
  const auto x = uniform_points(200, 5);
  std::vector<double> y;
  for (double v : x) y.push_back(2.0 - 3.0 * v);
  const SplineBasis basis = build_basis(x, 10);
  for (double lambda : {0.0, 1e-6, 1.0, 1e6}) {
    const SplineFit fit = fit_pls(basis, x, y, {}, lambda);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(fit(x[i]) == doctest::Approx(y[i]).epsilon(1e-9));
    CHECK(fit.rss < 1e-20);
  }
}

TEST_CASE("very large lambda gives the weighted least-squares line") {
  const auto x = uniform_points(300, 17);
  Rng rng(99);
  std::vector<double> y, w;
  for (double v : x) {
    y.push_back(std::sin(6.0 * v) + rng.normal(0.0, 0.2));
    w.push_back(1.0 + 4.0 * rng.uniform());
  }
  const SplineBasis basis = build_basis(x, 12);
  const SplineFit fit = fit_pls(basis, x, y, w, 1e10);
  const auto [a, b] = oracle::weighted_line(x, y, w);
  double max_dev = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double s = k / 100.0;
    max_dev = std::max(max_dev, std::abs(fit(s) - (a + b * s)));
  }
  CHECK(max_dev < 1e-5);
  CHECK(fit.edf == doctest::Approx(2.0).epsilon(1e-4));
}

TEST_CASE("constant weights give the unweighted fit") {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    const auto x = uniform_points(150, seed);
    Rng rng(seed + 100);
    std::vector<double> y;
    for (double v : x) y.push_back(std::exp(v) + rng.normal(0.0, 0.1));
    const double c = 0.5 + 10.0 * rng.uniform();
    const std::vector<double> w(x.size(), c);
    const SplineBasis basis = build_basis(x, 9);
    const double lambda = std::pow(10.0, -6.0 + 6.0 * rng.uniform());
    const SplineFit plain = fit_pls(basis, x, y, {}, lambda);
    const SplineFit weighted = fit_pls(basis, x, y, w, lambda);
    const double rel = (plain.coefficients - weighted.coefficients).norm() / plain.coefficients.norm();
    CHECK(rel < 1e-12);
  }
}

TEST_CASE("GCV matches a dense hat-matrix oracle") {
  const auto x = uniform_points(120, 21);
  Rng rng(22);
  std::vector<double> y, w;
  for (double v : x) {
    y.push_back(std::cos(5.0 * v) + rng.normal(0.0, 0.2));
    w.push_back(1.0 + rng.uniform());
  }
  const SplineBasis basis = build_basis(x, 11);
  const PenalizedSmoother smoother(basis, x, w);
  const auto n = static_cast<Eigen::Index>(x.size());
  double wsum = 0.0;
  for (double v : w) wsum += v;
  Eigen::VectorXd wn(n);
  for (Eigen::Index i = 0; i < n; ++i) wn(i) = w[i] / wsum;
  const Eigen::MatrixXd B = basis.design_matrix(x);
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);

  for (int trial = 0; trial < 5; ++trial) {
    const double lambda = std::pow(10.0, -7.0 + 8.0 * rng.uniform());
    const Eigen::MatrixXd A = B.transpose() * wn.asDiagonal() * B + lambda * basis.penalty();
    const Eigen::MatrixXd H = B * A.fullPivLu().solve(B.transpose() * wn.asDiagonal());
    // W^{1/2} H W^{-1/2} is symmetric with the same spectrum as H.
    const Eigen::VectorXd sq = wn.cwiseSqrt();
    const Eigen::MatrixXd S = sq.asDiagonal() * H * sq.cwiseInverse().asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (S + S.transpose()));
    const double trace = eig.eigenvalues().sum();
    const Eigen::VectorXd r = yv - H * yv;
    const double rss = (wn.array() * r.array().square()).sum();
    const double nn = static_cast<double>(n);
    const double gcv_ref = nn * nn * rss / ((nn - trace) * (nn - trace));

    const auto result = smoother.fit(y, lambda);
    CHECK(oracle::rel_diff(result.edf, trace) < 1e-8);
    CHECK(oracle::rel_diff(result.rss, rss) < 1e-8);
    CHECK(oracle::rel_diff(result.gcv, gcv_ref) < 1e-8);
  }
}

TEST_CASE("GCV picks an interior lambda for a wiggly signal") {
  const auto x = uniform_points(500, 31);
  Rng rng(32);
  std::vector<double> y;
  for (double v : x) y.push_back(std::sin(4.0 * std::numbers::pi * v) + rng.normal(0.0, 0.1));
  const auto grid = default_lambda_grid();
  const SplineFit fit = gcv_select(build_basis(x, 12), x, y, {}, grid);
  CHECK(fit.lambda > grid.front());
  CHECK(fit.lambda < grid.back());
  CHECK(fit.edf > 4.0);
}

TEST_CASE("GCV ties on exactly linear data resolve to the largest lambda") {
  const auto x = uniform_points(80, 41);
  std::vector<double> y;
  for (double v : x) y.push_back(0.5 + v);
  const auto grid = log_grid(1e-6, 1e2, 9);
  const SplineFit fit = gcv_select(build_basis(x, 8), x, y, {}, grid);
  CHECK(fit.lambda == grid.back());
}

TEST_CASE("square system at lambda 0 interpolates") {
  const auto x = uniform_points(9, 51);
  std::vector<double> y;
  for (double v : x) y.push_back(std::sin(3.0 * v) + v * v);
  const SplineBasis basis = build_basis(x, 9);
  REQUIRE(basis.dimension() == 9);
  const SplineFit fit = fit_pls(basis, x, y, {}, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(fit(x[i]) - y[i]) < 1e-8);
}

TEST_CASE("constant data, clamping and argument errors") {
  const auto x = uniform_points(60, 61);
  const std::vector<double> y(x.size(), 4.25);
  const SplineBasis basis = build_basis(x, 8);
  const SplineFit fit = gcv_select(basis, x, y, {}, default_lambda_grid());
  for (double s : {0.0, 0.3, 0.9, 1.0}) CHECK(fit(s) == doctest::Approx(4.25).epsilon(1e-12));

  std::vector<double> wiggly;
  for (double v : x) wiggly.push_back(std::sin(9.0 * v));
  const SplineFit wfit = fit_pls(basis, x, wiggly, {}, 1e-6);
  CHECK(wfit(1.2) == wfit(1.0));
  CHECK(wfit(-0.5) == wfit(0.0));
  const auto pred = predict_spline(wfit, std::vector<double>{0.2, 0.4});
  CHECK(pred[0] == wfit(0.2));

  CHECK_THROWS_AS(fit_pls(basis, std::vector<double>{0.5}, std::vector<double>{1.0}, {}, 1.0),
                  DomainError);
  CHECK_THROWS_AS(fit_pls(basis, x, y, {}, -1.0), DomainError);
  CHECK_THROWS_AS(gcv_select(basis, x, y, {}, std::vector<double>{}), DomainError);
}

TEST_CASE("edf decreases with lambda towards the null-space dimension") {
  const auto x = uniform_points(250, 71);
  const PenalizedSmoother smoother(build_basis(x, 12), x, {});
  double prev = smoother.edf(0.0);
  CHECK(prev == doctest::Approx(12.0).epsilon(1e-9));
  for (double lambda : log_grid(1e-10, 1e8, 40)) {
    const double e = smoother.edf(lambda);
    CHECK(e <= prev + 1e-12);
    CHECK(e >= 2.0);
    prev = e;
  }
  CHECK(smoother.edf(1e12) == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("returned coefficients are a local minimum of the penalized criterion") {
  const auto x = uniform_points(200, 81);
  Rng rng(82);
  std::vector<double> y, w;
  for (double v : x) {
    y.push_back(std::log1p(5.0 * v) + rng.normal(0.0, 0.1));
    w.push_back(0.5 + rng.uniform());
  }
  const SplineBasis basis = build_basis(x, 10);
  for (double lambda : {1e-6, 1e-3, 1.0}) {
    for (const auto& weights : {std::vector<double>{}, w}) {
      const SplineFit fit = fit_pls(basis, x, y, weights, lambda);
      const double base = pls_objective(basis, x, y, weights, lambda, fit.coefficients);
      for (int k = 0; k < basis.dimension(); ++k)
        for (double step : {1e-4, -1e-4}) {
          Eigen::VectorXd c = fit.coefficients;
          c(k) += step;
          CHECK(pls_objective(basis, x, y, weights, lambda, c) >= base);
        }
    }
  }
}

TEST_CASE("roughness quadratic form equals the integrated squared second derivative") {
  const auto x = uniform_points(300, 91);
  Rng rng(92);
  std::vector<double> y;
  for (double v : x) y.push_back(std::sin(7.0 * v) + rng.normal(0.0, 0.1));
  const SplineBasis basis = build_basis(x, 12);
  const SplineFit fit = fit_pls(basis, x, y, {}, 1e-5);
  const auto& t = basis.knots();
  auto g2 = [&](double s) {
    double v = 0.0;
    for (int k = 0; k < basis.dimension(); ++k)
      v += fit.coefficients(k) * oracle::bspline_derivative(t, k, 3, 2, s);
    return v * v;
  };
  const double integral = oracle::integrate(oracle::distinct_knots(t), 40, g2);
  CHECK(oracle::rel_diff(roughness(basis, fit.coefficients), integral) < 1e-8);
}
