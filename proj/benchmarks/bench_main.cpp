#include "amimpute/additive_model.hpp"
#include "amimpute/bootstrap.hpp"
#include "amimpute/imputation.hpp"
#include "amimpute/population.hpp"
#include "amimpute/response.hpp"
#include "amimpute/rng.hpp"
#include "amimpute/sampling.hpp"
#include "amimpute/spline.hpp"

#include <benchmark/benchmark.h>

using namespace amimpute;

namespace {

struct Fixture {
  Population pop;
  Sample sample;
  ImputationProblem problem;

  explicit Fixture(std::size_t n) : pop(generate_synthetic(2, 10000, 0.1, 7)) {
    Rng rng(11);
    sample = srswor(pop.size(), n, rng);
    const ResponseSet resp = draw_response(sample, calibrate_intercept(pop, 0, 1.0, 0.75), pop, rng);
    problem = make_problem(pop, sample, resp, true);
  }
};

std::vector<double> column(const Eigen::MatrixXd& X, Eigen::Index j) {
  return {X.col(j).data(), X.col(j).data() + X.rows()};
}

void BM_BuildBasis(benchmark::State& state) {
  const Fixture f(static_cast<std::size_t>(state.range(0)));
  const auto x = column(f.problem.X, 0);
  for (auto _ : state) benchmark::DoNotOptimize(build_basis(x, 10));
}
BENCHMARK(BM_BuildBasis)->Arg(200)->Arg(2000);

void BM_GcvSelect(benchmark::State& state) {
  const Fixture f(static_cast<std::size_t>(state.range(0)));
  const auto x = column(f.problem.X, 0);
  const SplineBasis basis = build_basis(x, 10);
  const auto grid = default_lambda_grid();
  for (auto _ : state) benchmark::DoNotOptimize(gcv_select(basis, x, f.problem.y, {}, grid));
}
BENCHMARK(BM_GcvSelect)->Arg(200)->Arg(2000);

void BM_FitAm(benchmark::State& state) {
  const Fixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(fit_am(f.problem.X, f.problem.y, {}, AmOptions{}));
}
BENCHMARK(BM_FitAm)->Arg(200)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_ImputeNearestNeighbor(benchmark::State& state) {
  const Fixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(impute_nearest_neighbor(f.problem));
}
BENCHMARK(BM_ImputeNearestNeighbor)->Arg(200)->Arg(2000);

void BM_ImputeAm(benchmark::State& state) {
  const Fixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(impute_am(f.problem));
}
BENCHMARK(BM_ImputeAm)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_BwoTwoReplicates(benchmark::State& state) {
  const Fixture f(2000);
  const ImputeFn fn = [](const ImputationProblem& p) { return impute_am(p); };
  Rng rng(13);
  for (auto _ : state) benchmark::DoNotOptimize(bwo_variance(f.sample, f.problem, fn, 2, rng));
}
BENCHMARK(BM_BwoTwoReplicates)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
