#include "amimpute/error.hpp"
#include "amimpute/population.hpp"
#include "amimpute/response.hpp"
#include "amimpute/rng.hpp"
#include "amimpute/sampling.hpp"
#include "doctest.h"

#include <cmath>

using namespace amimpute;

namespace {

double mean_p(const Population& pop, double b0, double b1) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < pop.X.rows(); ++i) s += 1.0 / (1.0 + std::exp(-(b0 + b1 * pop.X(i, 0))));
  return s / static_cast<double>(pop.X.rows());
}

}  // namespace

TEST_CASE("calibration inverts the logit when b1 is zero") {
  const Population pop = generate_synthetic(1, 1000, 0.1, 1);
  const auto m = calibrate_intercept(pop, 0, 0.0, 0.75);
  CHECK(m.b0 == doctest::Approx(std::log(3.0)).epsilon(1e-7));
  CHECK(m.b1 == 0.0);
}

TEST_CASE("calibrated model reaches the target mean response probability") {
  const Population pop = generate_synthetic(1, 10000, 0.1, 2);
  for (double target : {0.5, 0.7, 0.75, 0.9}) {
    const auto m = calibrate_intercept(pop, 0, 1.0, target);
    CHECK(std::abs(mean_p(pop, m.b0, m.b1) - target) < 1e-6);
    CHECK(std::abs(m.mean_probability(pop) - target) < 1e-8);
  }
  const auto steep = calibrate_intercept(pop, 2, -3.0, 0.75);
  CHECK(steep.covariate_index == 2);
  CHECK(std::abs(steep.mean_probability(pop) - 0.75) < 1e-8);
  CHECK_THROWS_AS(calibrate_intercept(pop, 0, 1.0, 1.0), DomainError);
  CHECK_THROWS_AS(calibrate_intercept(pop, 0, 1.0, 0.0), DomainError);
  CHECK_THROWS_AS(calibrate_intercept(pop, 9, 1.0, 0.5), DomainError);
}

TEST_CASE("larger targets need larger intercepts") {
  const Population pop = generate_synthetic(3, 3000, 0.1, 3);
  double prev = -1e300;
  for (double target = 0.05; target < 0.96; target += 0.05) {
    const double b0 = calibrate_intercept(pop, 0, 1.0, target).b0;
    CHECK(b0 > prev);
    prev = b0;
  }
}

TEST_CASE("probabilities stay inside the unit interval and saturate") {
  LogisticResponseModel m{0.0, 1.0, 0};
  CHECK(m.probability(0.0) == 0.5);
  for (double x : {-1e3, -50.0, 0.0, 0.4, 50.0, 1e3}) {
    const double p = m.probability(x);
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    CHECK(std::isfinite(p));
  }
  const Population pop = generate_synthetic(1, 500, 0.1, 4);
  Rng rng(5);
  const Sample s = srswor(500, 100, rng);
  const auto all = draw_response(s, LogisticResponseModel{50.0, 1.0, 0}, pop, rng);
  CHECK(all.respondent_count() == 100);
  CHECK(all.nonrespondents().empty());
  const auto none = draw_response(s, LogisticResponseModel{-50.0, 1.0, 0}, pop, rng);
  CHECK(none.respondent_count() == 0);
  CHECK(none.nonrespondents().size() == 100);
}

TEST_CASE("respondent fraction averages to the calibrated rate") {
  const Population pop = generate_synthetic(1, 10000, 0.1, 6);
  const auto m = calibrate_intercept(pop, 0, 1.0, 0.75);
  Rng rng(7);
  double total = 0.0;
  for (int r = 0; r < 1000; ++r) {
    const Sample s = srswor(10000, 2000, rng);
    const ResponseSet resp = draw_response(s, m, pop, rng);
    REQUIRE(resp.size() == 2000);
    const auto rs = resp.respondents();
    const auto ms = resp.nonrespondents();
    CHECK(rs.size() + ms.size() == 2000);
    CHECK(rs.size() == resp.respondent_count());
    total += static_cast<double>(rs.size()) / 2000.0;
  }
  CHECK(std::abs(total / 1000.0 - 0.75) < 0.01);
}

TEST_CASE("respondent and nonrespondent lists partition the sample") {
  const Population pop = generate_synthetic(2, 200, 0.1, 8);
  Rng rng(9);
  const Sample s = srswor(200, 50, rng);
  const ResponseSet resp = draw_response(s, calibrate_intercept(pop, 0, 1.0, 0.6), pop, rng);
  std::vector<int> seen(50, 0);
  for (auto i : resp.respondents()) {
    ++seen[i];
    CHECK(resp.responded[i] == 1);
  }
  for (auto i : resp.nonrespondents()) {
    ++seen[i];
    CHECK(resp.responded[i] == 0);
  }
  for (int c : seen) CHECK(c == 1);
}

TEST_CASE("indicators are uncorrelated across units") {
  Population pop;
  pop.X = Eigen::MatrixXd::Constant(4, 1, 0.5);
  pop.y = Eigen::VectorXd::Zero(4);
  Sample s;
  s.units = {0, 1, 2, 3};
  s.pi.assign(4, 1.0);
  s.weights.assign(4, 1.0);
  const LogisticResponseModel m{0.3, 1.0, 0};
  Rng rng(10);
  const int draws = 40000;
  Eigen::MatrixXd R(draws, 4);
  for (int r = 0; r < draws; ++r) {
    const auto resp = draw_response(s, m, pop, rng);
    for (int j = 0; j < 4; ++j) R(r, j) = resp.responded[j];
  }
  const Eigen::RowVectorXd mean = R.colwise().mean();
  const Eigen::MatrixXd C = R.rowwise() - mean;
  const Eigen::MatrixXd cov = C.transpose() * C / (draws - 1.0);
  for (int a = 0; a < 4; ++a) {
    CHECK(mean(a) == doctest::Approx(m.probability(0.5)).epsilon(0.02));
    for (int b = a + 1; b < 4; ++b) {
      const double corr = cov(a, b) / std::sqrt(cov(a, a) * cov(b, b));
      CHECK(std::abs(corr) < 0.025);
    }
  }
}
