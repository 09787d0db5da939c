#include "amimpute/population.hpp"

#include "amimpute/csv.hpp"
#include "amimpute/error.hpp"
#include "amimpute/rng.hpp"

#include <cmath>
#include <numbers>

namespace amimpute {

std::size_t Population::covariate_index(const std::string& name) const {
  for (std::size_t j = 0; j < x_names.size(); ++j)
    if (x_names[j] == name) return j;
  throw DomainError("population has no covariate named '" + name + "'");
}

double synthetic_mean(int pop_id, std::span<const double> x) {
  using std::numbers::pi;
  if (x.size() < 4) throw DomainError("synthetic populations need 4 covariates");
  const double x1 = x[0], x2 = x[1], x3 = x[2], x4 = x[3];
  switch (pop_id) {
    case 1:
      return 1.0 + 5.0 * x1 + x2 + x3 + x4;
    case 2:
      return 2.0 + std::cos(pi * x1 + pi) + std::sin(4.0 * pi * x2) +
             std::exp(-(x3 - 0.5) * (x3 - 0.5)) + (x4 - 0.5) * (x4 - 0.5);
    case 3:
      return 1.0 + std::cos(2.0 * pi * x1) + x1 * x2 + x3 * x3 * x4;
    case 4:
      return 2.0 + std::cos(pi * (x1 + x2)) * std::sin(pi * (x3 + x4));
    case 5:
      return 1.0;
    default:
      throw DomainError("synthetic population id must be in 1..5, got " + std::to_string(pop_id));
  }
}

void rescale_unit_interval(Eigen::Ref<Eigen::VectorXd> column) {
  if (column.size() == 0) return;
  const double lo = column.minCoeff();
  const double hi = column.maxCoeff();
  if (hi == lo) {
    column.setZero();
    return;
  }
  const double range = hi - lo;
  for (auto& v : column) v = (v - lo) / range;
}

Population generate_synthetic(int pop_id, std::size_t N, double noise_sd, std::uint64_t seed) {
  if (pop_id < 1 || pop_id > kSyntheticPopulations)
    throw DomainError("synthetic population id must be in 1..5, got " + std::to_string(pop_id));
  if (N == 0) throw DomainError("population size must be positive");
  if (!(noise_sd >= 0.0)) throw DomainError("noise_sd must be nonnegative");

  Rng rng(seed);
  Population pop;
  const auto n = static_cast<Eigen::Index>(N);
  pop.X.resize(n, 4);
  pop.y.resize(n);
  pop.x_names = {"x1", "x2", "x3", "x4"};
  for (Eigen::Index i = 0; i < n; ++i) {
    pop.X(i, 0) = rng.uniform();
    pop.X(i, 1) = rng.uniform();
    pop.X(i, 2) = rng.uniform();
    pop.X(i, 3) = rng.gamma(3.0, 1.0 / 6.0);
  }
  rescale_unit_interval(pop.X.col(3));
  std::array<double, 4> row{};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j < 4; ++j) row[j] = pop.X(i, j);
    pop.y(i) = synthetic_mean(pop_id, row) + rng.normal(0.0, noise_sd);
  }
  return pop;
}

Population load_csv(const std::filesystem::path& path, const std::string& y_column,
                    const std::vector<std::string>& x_columns, bool rescale) {
  if (x_columns.empty()) throw DomainError("at least one covariate column is required");
  const CsvTable table = read_csv(path);
  Population pop;
  pop.y_name = y_column;
  pop.x_names = x_columns;
  const auto y = table.numeric(y_column);
  const auto n = static_cast<Eigen::Index>(y.size());
  pop.y = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
  pop.X.resize(n, static_cast<Eigen::Index>(x_columns.size()));
  for (std::size_t j = 0; j < x_columns.size(); ++j) {
    const auto col = table.numeric(x_columns[j]);
    for (Eigen::Index i = 0; i < n; ++i) pop.X(i, static_cast<Eigen::Index>(j)) = col[i];
    if (rescale) rescale_unit_interval(pop.X.col(static_cast<Eigen::Index>(j)));
  }
  if (!rescale && ((pop.X.array() < 0.0).any() || (pop.X.array() > 1.0).any()))
    throw DomainError("covariates must lie in [0,1] when rescale is off");
  return pop;
}

void save_csv(const Population& pop, const std::filesystem::path& path) {
  CsvTable table;
  table.header.push_back(pop.y_name);
  for (const auto& name : pop.x_names) table.header.push_back(name);
  table.rows.reserve(pop.size());
  for (Eigen::Index i = 0; i < pop.y.size(); ++i) {
    std::vector<std::string> row;
    row.reserve(table.header.size());
    row.push_back(format_double(pop.y(i)));
    for (Eigen::Index j = 0; j < pop.X.cols(); ++j) row.push_back(format_double(pop.X(i, j)));
    table.rows.push_back(std::move(row));
  }
  write_csv(path, table);
}

double population_total(const Population& pop) { return pop.y.sum(); }

}  // namespace amimpute
