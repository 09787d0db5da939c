#include "amimpute/metrics.hpp"

#include "amimpute/bootstrap.hpp"
#include "amimpute/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace amimpute {
namespace {

double mean_total(const MethodResults& r) {
  if (r.replicates.empty()) throw DomainError("no replicates for method " + r.method);
  double s = 0.0;
  for (const auto& rep : r.replicates) s += rep.total;
  return s / static_cast<double>(r.replicates.size());
}

void require_total(double Y) {
  if (Y == 0.0) throw DomainError("true total is zero; relative measures undefined");
}

}  // namespace

const MethodResults& SimulationResult::method(const std::string& name) const {
  for (const auto& m : methods)
    if (m.method == name) return m;
  throw DomainError("no results for method '" + name + "'");
}

PredictionErrors prediction_errors(std::span<const double> imputed, std::span<const double> truth) {
  if (imputed.size() != truth.size()) throw DomainError("prediction error inputs differ in length");
  PredictionErrors e;
  for (std::size_t i = 0; i < imputed.size(); ++i) {
    if (truth[i] == 0.0) {
      ++e.zero_y_excluded;
      continue;
    }
    e.abs_rel_error_sum += std::abs((imputed[i] - truth[i]) / truth[i]);
    ++e.predicted;
  }
  return e;
}

double mrpe(const MethodResults& results) {
  double s = 0.0;
  std::size_t used = 0;
  for (const auto& rep : results.replicates) {
    if (rep.predicted == 0) continue;
    s += rep.abs_rel_error_sum / static_cast<double>(rep.predicted);
    ++used;
  }
  return used ? s / static_cast<double>(used) : 0.0;
}

std::size_t zero_y_excluded(const MethodResults& results) {
  std::size_t c = 0;
  for (const auto& rep : results.replicates) c += rep.zero_y_excluded;
  return c;
}

double monte_carlo_variance(const MethodResults& results) {
  const std::size_t L = results.replicates.size();
  if (L < 2) throw DomainError("Monte Carlo variance needs at least 2 replicates");
  const double m = mean_total(results);
  double ss = 0.0;
  for (const auto& rep : results.replicates) ss += (rep.total - m) * (rep.total - m);
  return ss / static_cast<double>(L - 1);
}

double relative_bias(const MethodResults& results, double true_total) {
  require_total(true_total);
  return (mean_total(results) - true_total) / true_total;
}

double relative_root_variance(const MethodResults& results, double true_total) {
  require_total(true_total);
  return std::sqrt(monte_carlo_variance(results)) / std::abs(true_total);
}

double relative_rmse(const MethodResults& results, double true_total) {
  require_total(true_total);
  const double bias = mean_total(results) - true_total;
  return std::sqrt(bias * bias + monte_carlo_variance(results)) / std::abs(true_total);
}

EstimatorMeasures measures(const MethodResults& results, double true_total) {
  return {mrpe(results), relative_bias(results, true_total),
          relative_root_variance(results, true_total), relative_rmse(results, true_total)};
}

BootstrapSummary bootstrap_summary(const MethodResults& results, double true_total,
                                   double level) {
  BootstrapSummary out;
  out.var = monte_carlo_variance(results);
  std::size_t covered = 0;
  double vsum = 0.0;
  for (const auto& rep : results.replicates) {
    if (!rep.boot_variance)
      throw DomainError("bootstrap variance missing for method " + results.method);
    vsum += *rep.boot_variance;
    const auto [lo, hi] = confidence_interval(rep.total, *rep.boot_variance, level);
    if (lo <= true_total && true_total <= hi) ++covered;
  }
  const auto L = static_cast<double>(results.replicates.size());
  out.var_boot = vsum / L;
  out.coverage = static_cast<double>(covered) / L;
  return out;
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    // Positions i..j-1 share ranks i+1..j.
    const double shared = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = shared;
    i = j;
  }
  return ranks;
}

std::vector<RankRow> rank_methods(std::span<const PopulationMeasures> populations) {
  if (populations.empty()) throw DomainError("ranking needs at least one population");
  const auto& methods = populations.front().methods;
  const std::size_t m = methods.size();
  if (m < 2) throw DomainError("ranking needs at least two methods");
  std::vector<RankRow> rows(m);
  for (std::size_t k = 0; k < m; ++k) rows[k].method = methods[k];

  std::vector<double> col(m);
  for (const auto& pop : populations) {
    if (pop.methods != methods || pop.values.size() != m)
      throw DomainError("population " + pop.population + " lists different methods");
    auto accumulate = [&](auto get, auto set) {
      for (std::size_t k = 0; k < m; ++k) col[k] = get(pop.values[k]);
      const auto r = average_ranks(col);
      for (std::size_t k = 0; k < m; ++k) set(rows[k].ranks, r[k]);
    };
    accumulate([](const EstimatorMeasures& e) { return e.mrpe; },
               [](EstimatorMeasures& e, double r) { e.mrpe += r; });
    accumulate([](const EstimatorMeasures& e) { return std::abs(e.rb); },
               [](EstimatorMeasures& e, double r) { e.rb += r; });
    accumulate([](const EstimatorMeasures& e) { return e.rrvar; },
               [](EstimatorMeasures& e, double r) { e.rrvar += r; });
    accumulate([](const EstimatorMeasures& e) { return e.rrmse; },
               [](EstimatorMeasures& e, double r) { e.rrmse += r; });
  }
  const auto P = static_cast<double>(populations.size());
  for (auto& row : rows) {
    row.ranks.mrpe /= P;
    row.ranks.rb /= P;
    row.ranks.rrvar /= P;
    row.ranks.rrmse /= P;
  }
  return rows;
}

}  // namespace amimpute
