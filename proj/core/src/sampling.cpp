#include "amimpute/sampling.hpp"

#include "amimpute/csv.hpp"
#include "amimpute/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace amimpute {

std::vector<std::size_t> draw_srswor_indices(std::size_t N, std::size_t n, Rng& rng) {
  if (n > N) throw DomainError("sample size exceeds population size");
  // Selection sampling (Knuth's Algorithm S): every n-subset is equally likely
  // and the output comes out sorted.
  std::vector<std::size_t> out;
  out.reserve(n);
  std::size_t needed = n;
  for (std::size_t i = 0; i < N && needed > 0; ++i) {
    const std::size_t remaining = N - i;
    if (rng.below(remaining) < needed) {
      out.push_back(i);
      --needed;
    }
  }
  return out;
}

std::size_t randomized_round(double value, Rng& rng) {
  if (!(value >= 0.0)) throw DomainError("randomized_round needs a nonnegative value");
  const double nearest = std::round(value);
  if (std::abs(value - nearest) <= 1e-9 * std::max(1.0, value))
    return static_cast<std::size_t>(nearest);
  const double base = std::floor(value);
  const double frac = value - base;
  return static_cast<std::size_t>(base) + (rng.uniform() < frac ? 1 : 0);
}

Sample srswor(std::size_t N, std::size_t n, Rng& rng) {
  if (n == 0 || n > N) throw DomainError("SRSWOR needs 1 <= n <= N");
  Sample s;
  s.units = draw_srswor_indices(N, n, rng);
  const double pi = static_cast<double>(n) / static_cast<double>(N);
  s.pi.assign(n, pi);
  s.weights.assign(n, 1.0 / pi);
  s.population_size = N;
  return s;
}

StrataAssignment stratify_by_medians(const Population& pop, std::span<const std::size_t> vars) {
  if (vars.empty()) throw DomainError("stratification needs at least one variable");
  for (auto v : vars)
    if (v >= pop.covariates()) throw DomainError("stratification variable index out of range");

  std::vector<std::vector<std::size_t>> groups(1);
  groups[0].resize(pop.size());
  std::iota(groups[0].begin(), groups[0].end(), std::size_t{0});

  for (auto var : vars) {
    const auto col = pop.X.col(static_cast<Eigen::Index>(var));
    std::vector<std::vector<std::size_t>> next;
    next.reserve(groups.size() * 2);
    for (auto& g : groups) {
      std::sort(g.begin(), g.end(), [&](std::size_t a, std::size_t b) {
        const double va = col(static_cast<Eigen::Index>(a));
        const double vb = col(static_cast<Eigen::Index>(b));
        return va < vb || (va == vb && a < b);
      });
      const std::size_t m = g.size();
      std::size_t lower = 0;
      if (m > 0) {
        const double lo_mid = col(static_cast<Eigen::Index>(g[(m - 1) / 2]));
        const double hi_mid = col(static_cast<Eigen::Index>(g[m / 2]));
        const double median = lo_mid + (hi_mid - lo_mid) / 2.0;
        lower = static_cast<std::size_t>(
            std::upper_bound(g.begin(), g.end(), median,
                             [&](double v, std::size_t u) {
                               return v < col(static_cast<Eigen::Index>(u));
                             }) -
            g.begin());
        // Ties at the median all land low; push the largest ones up to rebalance.
        if (lower > m - lower + 1) lower = (m + 1) / 2;
      }
      std::vector<std::size_t> lo(g.begin(), g.begin() + static_cast<std::ptrdiff_t>(lower));
      std::vector<std::size_t> hi(g.begin() + static_cast<std::ptrdiff_t>(lower), g.end());
      next.push_back(std::move(lo));
      next.push_back(std::move(hi));
    }
    groups = std::move(next);
  }

  StrataAssignment out;
  out.count = static_cast<int>(groups.size());
  out.labels.assign(pop.size(), 0);
  out.sizes.resize(groups.size());
  for (std::size_t h = 0; h < groups.size(); ++h) {
    out.sizes[h] = groups[h].size();
    for (auto u : groups[h]) out.labels[u] = static_cast<int>(h) + 1;
  }
  return out;
}

Sample stratified_sample(const StrataAssignment& strata, double rate, Rng& rng) {
  if (!(rate > 0.0 && rate <= 1.0)) throw DomainError("sampling rate must lie in (0, 1]");
  const auto H = static_cast<std::size_t>(strata.count);
  std::vector<std::vector<std::size_t>> members(H);
  for (std::size_t u = 0; u < strata.labels.size(); ++u)
    members[static_cast<std::size_t>(strata.labels[u] - 1)].push_back(u);

  Sample s;
  s.population_size = strata.labels.size();
  s.strata.resize(H);
  for (std::size_t h = 0; h < H; ++h) {
    const std::size_t Nh = members[h].size();
    const std::size_t nh = randomized_round(rate * static_cast<double>(Nh), rng);
    if (nh == 0 || nh > Nh)
      throw DomainError("stratum " + std::to_string(h + 1) + " gets an empty sample at rate " +
                        format_double(rate));
    s.strata[h] = {Nh, nh};
    const double pi = static_cast<double>(nh) / static_cast<double>(Nh);
    for (auto pos : draw_srswor_indices(Nh, nh, rng)) {
      s.units.push_back(members[h][pos]);
      s.pi.push_back(pi);
      s.weights.push_back(1.0 / pi);
      s.stratum.push_back(static_cast<int>(h) + 1);
    }
  }
  return s;
}

double horvitz_thompson(const Sample& sample, std::span<const double> y_values) {
  if (y_values.size() != sample.size())
    throw DomainError("Horvitz-Thompson needs one y value per sampled unit");
  double total = 0.0;
  for (std::size_t i = 0; i < y_values.size(); ++i) total += y_values[i] / sample.pi[i];
  return total;
}

void save_sample_csv(const Sample& sample, const std::filesystem::path& path) {
  CsvTable table;
  table.header = {"unit_id", "pi", "stratum"};
  for (std::size_t i = 0; i < sample.size(); ++i)
    table.rows.push_back({std::to_string(sample.units[i]), format_double(sample.pi[i]),
                          sample.stratum.empty() ? "" : std::to_string(sample.stratum[i])});
  write_csv(path, table);
}

}  // namespace amimpute
