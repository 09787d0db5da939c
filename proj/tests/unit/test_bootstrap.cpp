#include "amimpute/bootstrap.hpp"
#include "amimpute/error.hpp"
#include "amimpute/population.hpp"
#include "amimpute/response.hpp"
#include "amimpute/rng.hpp"
#include "amimpute/sampling.hpp"
#include "doctest.h"

#include <cmath>
#include <limits>
#include <numeric>

using namespace amimpute;

namespace {

struct Setup {
  Population pop;
  StrataAssignment strata;
  LogisticResponseModel model;
};

const Setup& setup() {
  static const Setup s = [] {
    Setup out;
    out.pop = generate_synthetic(1, 10000, 0.1, 77);
    out.strata = stratify_by_medians(out.pop, std::vector<std::size_t>{0, 1, 2, 3});
    out.model = calibrate_intercept(out.pop, 0, 1.0, 0.75);
    return out;
  }();
  return s;
}

ImputationProblem problem_for(const Sample& sample, Rng& rng) {
  const auto& s = setup();
  return make_problem(s.pop, sample, draw_response(sample, s.model, s.pop, rng), true);
}

ImputationProblem constant_problem(std::size_t n, double c) {
  ImputationProblem p;
  p.X = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(n), 1, 0.5);
  p.y.assign(n, c);
  p.responded.assign(n, 1);
  for (std::size_t i = 0; i < n; i += 3) {
    p.responded[i] = 0;
    p.y[i] = std::numeric_limits<double>::quiet_NaN();
  }
  return p;
}

const ImputeFn mean_fn = [](const ImputationProblem& p) { return impute_mean(p); };

}  // namespace

TEST_CASE("pseudopopulation copies") {
  CHECK(pseudopopulation_copies(10000, 2000) == 5);
  CHECK(pseudopopulation_copies(10, 4) == 2);   // 2.5 ties to even
  CHECK(pseudopopulation_copies(14, 4) == 4);   // 3.5 ties to even
  CHECK(pseudopopulation_copies(11, 3) == 4);
  CHECK(pseudopopulation_copies(7, 7) == 1);
  CHECK_THROWS_AS(pseudopopulation_copies(5, 6), DomainError);
}

TEST_CASE("pseudopopulation units replicate their source sample units") {
  Rng rng(1);
  const Sample sample = srswor(10000, 2000, rng);
  const auto data = problem_for(sample, rng);
  const Pseudopopulation pseudo = build_pseudopopulation(sample, data);
  CHECK(pseudo.copies == 5);
  REQUIRE(pseudo.units.size() == 10000);
  std::vector<int> copies(2000, 0);
  for (std::size_t u = 0; u < pseudo.units.size(); ++u) {
    const std::size_t src = pseudo.source[u];
    ++copies[src];
    const auto row = static_cast<Eigen::Index>(u);
    const auto srow = static_cast<Eigen::Index>(src);
    REQUIRE(pseudo.units.X.row(row) == data.X.row(srow));
    REQUIRE(pseudo.units.responded[u] == data.responded[src]);
    if (data.responded[src]) REQUIRE(pseudo.units.y[u] == data.y[src]);
  }
  for (int c : copies) CHECK(c == 5);
}

TEST_CASE("constant data has zero bootstrap variance") {
  Rng rng(2);
  Sample sample = srswor(100, 20, rng);
  const auto data = constant_problem(20, 3.0);
  const auto bwo = bwo_variance(sample, data, mean_fn, 30, rng);
  CHECK(bwo.replicates == 30);
  for (double t : bwo.replicate_totals) CHECK(t == doctest::Approx(300.0).epsilon(1e-14));
  CHECK(bwo.variance == doctest::Approx(0.0));
  CHECK(bwo.variance >= 0.0);

  const auto& s = setup();
  const Sample ss = stratified_sample(s.strata, 0.2, rng);
  const auto cdata = constant_problem(ss.size(), 3.0);
  const auto mmb = mmb_variance(ss, cdata, mean_fn, NPrimeRule::parse("f*n_h"), 30, rng);
  for (double t : mmb.replicate_totals) CHECK(t == doctest::Approx(30000.0).epsilon(1e-12));
  CHECK(mmb.variance < 1e-12 * 30000.0 * 30000.0);
}

TEST_CASE("variance is recomputed exactly from replicate totals") {
  Rng rng(3);
  const Sample sample = srswor(10000, 2000, rng);
  const auto data = problem_for(sample, rng);
  const auto res = bwo_variance(sample, data, mean_fn, 40, rng, 2);
  const double mean = std::accumulate(res.replicate_totals.begin(), res.replicate_totals.end(), 0.0) / 40.0;
  double ss = 0.0;
  for (double t : res.replicate_totals) ss += (t - mean) * (t - mean);
  CHECK(std::abs(res.variance - ss / 40.0) <= 1e-12 * res.variance);
  CHECK(res.mean_total == doctest::Approx(mean).epsilon(1e-14));
  CHECK(res.variance > 0.0);
  const auto direct = summarize_replicates({1.0, 2.0, 3.0, 6.0});
  CHECK(direct.variance == 3.5);
  CHECK(direct.mean_total == 3.0);
}

TEST_CASE("bootstrap output does not depend on the thread count") {
  const auto& s = setup();
  Rng draw(4);
  const Sample sample = stratified_sample(s.strata, 0.2, draw);
  const auto data = problem_for(sample, draw);
  const auto rule = NPrimeRule::parse("f*n_h");
  Rng a(5), b(5);
  const auto one = mmb_variance(sample, data, mean_fn, rule, 16, a, 1);
  const auto four = mmb_variance(sample, data, mean_fn, rule, 16, b, 4);
  CHECK(one.replicate_totals == four.replicate_totals);
  CHECK(one.variance == four.variance);
}

TEST_CASE("mirror-match sizes") {
  const auto& s = setup();
  Rng rng(6);
  const Sample sample = stratified_sample(s.strata, 0.2, rng);
  const auto rule = NPrimeRule::parse("f*n_h");
  CHECK(rule.evaluate(sample.strata[0]) == 25.0);
  for (int b = 0; b < 100; ++b) {
    const auto d = draw_mirror_match(sample, rule, rng);
    for (std::size_t h = 0; h < 16; ++h) {
      CHECK(d.subsample_sizes[h] == 25);
      CHECK(d.copies[h] == 5);
      CHECK(d.stratum_sizes[h] == 125);
    }
    CHECK(d.total_size == 2000);
    for (double w : d.weights) CHECK(w == 5.0);
    for (std::size_t i = 0; i < d.positions.size(); ++i) {
      // Units drawn for stratum h come from stratum h of the sample.
      const std::size_t h = i / 125;
      CHECK(sample.stratum[d.positions[i]] == static_cast<int>(h + 1));
    }
  }
}

TEST_CASE("mirror-match randomizes non-integer copy counts") {
  Sample sample;
  sample.population_size = 150;
  sample.strata = {{150, 10}};
  for (std::size_t i = 0; i < 10; ++i) {
    sample.units.push_back(i * 15);
    sample.pi.push_back(10.0 / 150.0);
    sample.weights.push_back(15.0);
    sample.stratum.push_back(1);
  }
  const auto rule = NPrimeRule::parse("3");
  Rng rng(7);
  double total = 0.0;
  const int draws = 10000;
  for (int r = 0; r < draws; ++r) {
    const auto d = draw_mirror_match(sample, rule, rng);
    CHECK(d.subsample_sizes[0] == 3);
    CHECK((d.copies[0] == 2 || d.copies[0] == 3));
    total += static_cast<double>(d.copies[0]);
  }
  CHECK(std::abs(total / draws - 2.5) < 0.05);
}

TEST_CASE("n-prime rules") {
  const StratumDesign s{625, 125};
  CHECK(NPrimeRule::parse("f*n_h").evaluate(s) == 25.0);
  CHECK(NPrimeRule::parse("0.5*n_h").evaluate(s) == 62.5);
  CHECK(NPrimeRule::parse(" 40 ").evaluate(s) == 40.0);
  CHECK(NPrimeRule::parse("0.5*n_h").str() == "0.5*n_h");
  CHECK_THROWS_AS(NPrimeRule::parse("half"), ConfigError);
  CHECK_THROWS_AS(NPrimeRule::parse("-2"), ConfigError);

  const auto& st = setup();
  Rng rng(8);
  const Sample sample = stratified_sample(st.strata, 0.2, rng);
  CHECK_THROWS_AS(check_n_prime_rule(sample, NPrimeRule::parse("125")), ConfigError);
  CHECK_THROWS_AS(check_n_prime_rule(sample, NPrimeRule::parse("0.5")), ConfigError);
  CHECK_NOTHROW(check_n_prime_rule(sample, NPrimeRule::parse("0.1*n_h")));
  const Sample plain = srswor(100, 10, rng);
  CHECK_THROWS_AS(check_n_prime_rule(plain, NPrimeRule::parse("f*n_h")), DomainError);
}

TEST_CASE("replicates without respondents are redrawn and eventually rejected") {
  Rng rng(9);
  const Sample sample = srswor(40, 20, rng);
  ImputationProblem none = constant_problem(20, 1.0);
  none.responded.assign(20, 0);
  CHECK_THROWS_AS(bwo_variance(sample, none, mean_fn, 5, rng), NoRespondentsError);

  // A single respondent among 20 is missed by most size-20 draws from 40 units.
  ImputationProblem one = constant_problem(20, 2.0);
  one.responded.assign(20, 0);
  one.responded[7] = 1;
  one.y[7] = 2.0;
  const auto res = bwo_variance(sample, one, mean_fn, 50, rng);
  CHECK(res.redraws > 0);
  for (double t : res.replicate_totals) CHECK(t == doctest::Approx(80.0));
  CHECK_THROWS_AS(bwo_variance(sample, one, mean_fn, 1, rng), DomainError);
}

TEST_CASE("confidence intervals") {
  const auto [lo, hi] = confidence_interval(100.0, 4.0, 0.95);
  CHECK(lo == doctest::Approx(96.08).epsilon(1e-4));
  CHECK(hi == doctest::Approx(103.92).epsilon(1e-4));
  CHECK(hi - 100.0 == doctest::Approx(2.0 * 1.959963984540054).epsilon(1e-12));
  const auto [a, b] = confidence_interval(42.0, 0.0, 0.95);
  CHECK(a == 42.0);
  CHECK(b == 42.0);
  CHECK_THROWS_AS(confidence_interval(1.0, -1.0, 0.95), DomainError);
  CHECK_THROWS_AS(confidence_interval(1.0, 1.0, 1.5), DomainError);
}
