#include "amimpute/bootstrap.hpp"
#include "amimpute/config.hpp"
#include "amimpute/csv.hpp"
#include "amimpute/error.hpp"
#include "amimpute/imputation.hpp"
#include "amimpute/metrics.hpp"
#include "amimpute/population.hpp"
#include "amimpute/rng.hpp"
#include "amimpute/runner.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using namespace amimpute;

namespace {

struct SampleFile {
  CsvTable table;
  std::vector<std::string> x_columns;
  ImputationProblem problem;
};

// Columns that describe the design rather than covariates.
bool reserved(const std::string& name, const std::string& y, const std::string& weights) {
  return name == y || name == weights || name == "pi" || name == "stratum" || name == "unit_id";
}

SampleFile read_sample(const fs::path& path, const std::string& y_column,
                       std::vector<std::string> x_columns, const std::string& weight_column,
                       bool rescale) {
  SampleFile f;
  f.table = read_csv(path);
  if (f.table.rows.empty()) throw ParseError(path.string() + ": no data rows");
  if (x_columns.empty())
    for (const auto& h : f.table.header)
      if (!reserved(h, y_column, weight_column)) x_columns.push_back(h);
  if (x_columns.empty()) throw ParseError(path.string() + ": no covariate columns");

  const auto y = f.table.numeric(y_column, true);
  const auto n = static_cast<Eigen::Index>(y.size());
  f.problem.X.resize(n, static_cast<Eigen::Index>(x_columns.size()));
  for (std::size_t j = 0; j < x_columns.size(); ++j) {
    const auto col = f.table.numeric(x_columns[j]);
    Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(col.data(), n);
    if (rescale) rescale_unit_interval(v);
    if (v.minCoeff() < 0.0 || v.maxCoeff() > 1.0)
      throw DomainError("column '" + x_columns[j] + "' is outside [0, 1]; pass --rescale");
    f.problem.X.col(static_cast<Eigen::Index>(j)) = v;
  }
  for (const auto& v : y) {
    f.problem.responded.push_back(v ? 1 : 0);
    f.problem.y.push_back(v ? *v : std::numeric_limits<double>::quiet_NaN());
  }
  if (!weight_column.empty()) f.problem.weights = f.table.numeric(weight_column);
  f.x_columns = std::move(x_columns);
  return f;
}

std::string lambda_list(const ImputedDataset& d, const std::vector<std::string>& names) {
  std::ostringstream os;
  for (std::size_t j = 0; j < d.lambdas.size(); ++j) {
    if (j) os << ' ';
    os << names[j] << '=' << (std::isnan(d.lambdas[j]) ? "dropped" : format_double(d.lambdas[j]));
  }
  return os.str();
}

int cmd_generate(int pop, std::size_t n, double noise_sd, std::uint64_t seed, const fs::path& out) {
  const Population p = generate_synthetic(pop, n, noise_sd, seed);
  save_csv(p, out);
  std::cout << "wrote " << n << " rows of population " << pop << " to " << out.string()
            << " (total " << format_double(population_total(p)) << ")\n";
  return 0;
}

int cmd_simulate(const fs::path& config_path, std::optional<int> threads,
                 std::optional<std::uint64_t> seed, std::optional<fs::path> out) {
  ExperimentConfig config = load_config(config_path);
  if (threads) config.threads = *threads;
  if (seed) config.seed = *seed;
  if (out) config.output_dir = *out;
  const auto problems = validate_config(config);
  if (!problems.empty()) {
    std::cerr << "invalid configuration:\n";
    for (const auto& p : problems) std::cerr << "  " << p << "\n";
    return 2;
  }
  const StudyResult study = run_experiment(config);
  for (const auto& cell : study.cells) {
    std::cout << "population " << cell.population << ", " << design_name(cell.design) << ": "
              << cell.result.methods.front().replicates.size() << " replicates";
    if (cell.failures) std::cout << ", " << cell.failures << " failed";
    std::cout << "\n";
    for (const auto& m : cell.result.methods) {
      if (m.replicates.size() < 2) continue;
      const auto e = measures(m, cell.result.true_total);
      std::cout << "  " << m.method << "  MRPE " << format_double(e.mrpe) << "  RB "
                << format_double(e.rb) << "  RRMSE " << format_double(e.rrmse) << "\n";
    }
  }
  std::cout << "results in " << config.output_dir.string() << "\n";
  return 0;
}

int cmd_impute(const fs::path& in, const fs::path& out, const std::string& method_text,
               const std::string& y_column, const std::vector<std::string>& x_columns,
               const std::string& weight_column, bool rescale, int basis_size,
               const std::optional<fs::path>& summary_path) {
  const ImputationMethod method = parse_method(method_text);
  SampleFile f = read_sample(in, y_column, x_columns, weight_column, rescale);
  AmOptions options;
  options.basis_size = basis_size;
  const ImputedDataset d = impute(method, f.problem, options);

  CsvTable table = f.table;
  const std::size_t y_col = table.column(y_column);
  table.header.push_back("imputed");
  std::size_t filled = 0;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const bool missing = !f.problem.responded[i];
    if (missing) {
      table.rows[i][y_col] = format_double(d.values[i]);
      ++filled;
    }
    table.rows[i].push_back(missing ? "1" : "0");
  }
  write_csv(out, table);

  std::ostringstream summary;
  summary << "method = " << method_name(method) << "\n"
          << "rows = " << table.rows.size() << "\n"
          << "imputed = " << filled << "\n"
          << "fallback = " << (d.used_fallback() ? d.fallback : "none") << "\n";
  if (!d.lambdas.empty()) summary << "lambda = " << lambda_list(d, f.x_columns) << "\n";
  std::cout << summary.str();
  const fs::path sp = summary_path ? *summary_path : fs::path(out.string() + ".summary.txt");
  std::ofstream(sp) << summary.str();
  return 0;
}

// Population sizes are recovered from the inclusion probabilities: N = sum 1/pi overall and
// N_h = n_h / pi_h within strata.
Sample design_from_table(const CsvTable& table, DesignKind design) {
  const auto pi = table.numeric("pi");
  Sample s;
  double N = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) {
    if (!(pi[i] > 0.0 && pi[i] <= 1.0)) throw DomainError("pi must lie in (0, 1]");
    s.units.push_back(i);
    s.pi.push_back(pi[i]);
    s.weights.push_back(1.0 / pi[i]);
    N += 1.0 / pi[i];
  }
  s.population_size = static_cast<std::size_t>(std::llround(N));
  if (design == DesignKind::Stratified) {
    const auto labels = table.numeric("stratum");
    std::map<long long, int> ids;
    for (double v : labels) ids.emplace(std::llround(v), 0);
    int next = 1;
    for (auto& [k, v] : ids) v = next++;
    s.strata.assign(ids.size(), {});
    std::vector<double> pi_h(ids.size(), 0.0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const int h = ids[std::llround(labels[i])];
      s.stratum.push_back(h);
      ++s.strata[h - 1].sample_size;
      pi_h[h - 1] = pi[i];
    }
    s.population_size = 0;
    for (std::size_t h = 0; h < s.strata.size(); ++h) {
      s.strata[h].population_size = static_cast<std::size_t>(
          std::llround(static_cast<double>(s.strata[h].sample_size) / pi_h[h]));
      s.population_size += s.strata[h].population_size;
    }
  }
  return s;
}

int cmd_bootstrap(const fs::path& in, const std::string& design_text, int B,
                  const std::string& rule_text, std::uint64_t seed, const std::string& method_text,
                  const std::string& y_column, const std::vector<std::string>& x_columns,
                  bool weighted, double level, int threads) {
  const DesignKind design = parse_design(design_text);
  const ImputationMethod method = parse_method(method_text);
  SampleFile f = read_sample(in, y_column, x_columns, "", false);
  const Sample sample = design_from_table(f.table, design);
  if (weighted) f.problem.weights = sample.weights;

  const ImputeFn fn = [method](const ImputationProblem& p) { return impute(method, p); };
  const ImputedDataset point = fn(f.problem);
  const double total = imputed_total(sample, point);
  Rng rng(seed);
  const BootstrapVariance v =
      design == DesignKind::Srswor
          ? bwo_variance(sample, f.problem, fn, B, rng, threads)
          : mmb_variance(sample, f.problem, fn, NPrimeRule::parse(rule_text), B, rng, threads);
  const auto [lo, hi] = confidence_interval(total, v.variance, level);
  std::cout << "design = " << design_name(design) << "\n"
            << "method = " << method_name(method) << "\n"
            << "n = " << sample.size() << "\n"
            << "N = " << sample.population_size << "\n"
            << "respondents = " << f.problem.respondent_count() << "\n"
            << "total = " << format_double(total) << "\n"
            << "B = " << v.replicates << "\n"
            << "variance = " << format_double(v.variance) << "\n"
            << "ci_low = " << format_double(lo) << "\n"
            << "ci_high = " << format_double(hi) << "\n"
            << "fallbacks = " << v.fallback_count << "\n"
            << "redraws = " << v.redraws << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Survey imputation with additive models"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "Write a synthetic population to CSV");
  int pop = 1;
  std::size_t n = 10000;
  double noise_sd = 0.1;
  std::uint64_t gen_seed = 1;
  fs::path gen_out;
  gen->add_option("--pop", pop, "Population id")->required()->check(CLI::Range(1, 5));
  gen->add_option("--n", n, "Population size")->required()->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed, "Random seed")->required();
  gen->add_option("--noise-sd", noise_sd, "Error standard deviation")->capture_default_str();
  gen->add_option("--out", gen_out, "Output CSV")->required();

  auto* sim = app.add_subcommand("simulate", "Run a Monte Carlo study from a config file");
  fs::path config_path;
  std::optional<int> sim_threads;
  std::optional<std::uint64_t> sim_seed;
  std::optional<fs::path> sim_out;
  sim->add_option("--config", config_path, "INI configuration")->required()->check(CLI::ExistingFile);
  sim->add_option("--threads", sim_threads, "Worker threads")->check(CLI::PositiveNumber);
  sim->add_option("--seed", sim_seed, "Master seed");
  sim->add_option("--out", sim_out, "Output directory");

  auto* imp = app.add_subcommand("impute", "Fill empty y cells of a sample CSV");
  fs::path imp_in, imp_out;
  std::optional<fs::path> imp_summary;
  std::string imp_method, imp_y = "y", imp_weights;
  std::vector<std::string> imp_x;
  bool imp_rescale = false;
  int basis_size = AmOptions{}.basis_size;
  imp->add_option("--in", imp_in, "Input CSV")->required()->check(CLI::ExistingFile);
  imp->add_option("--method", imp_method, "mean, reg, nn or am")
      ->required()
      ->check(CLI::IsMember({"mean", "reg", "nn", "am"}));
  imp->add_option("--out", imp_out, "Completed CSV")->required();
  imp->add_option("--summary", imp_summary, "Summary file (default <out>.summary.txt)");
  imp->add_option("--y", imp_y, "Column with missing values")->capture_default_str();
  imp->add_option("--x", imp_x, "Covariate columns (default: all other columns)")->delimiter(',');
  imp->add_option("--weights", imp_weights, "Design weight column");
  imp->add_flag("--rescale", imp_rescale, "Min-max rescale covariates to [0, 1]");
  imp->add_option("--basis-size", basis_size, "Spline basis size per term")->capture_default_str();

  auto* boot = app.add_subcommand("bootstrap-variance",
                                  "Bootstrap variance of the imputed total for a sample CSV");
  fs::path boot_in;
  std::string boot_design, boot_rule = "f*n_h", boot_method = "am", boot_y = "y";
  std::vector<std::string> boot_x;
  int B = 100, boot_threads = 1;
  std::uint64_t boot_seed = 1;
  double level = 0.95;
  bool unweighted = false;
  boot->add_option("--in", boot_in, "Sample CSV with y, covariates, pi and stratum")
      ->required()
      ->check(CLI::ExistingFile);
  boot->add_option("--design", boot_design, "srswor or ss")
      ->required()
      ->check(CLI::IsMember({"srswor", "ss"}));
  boot->add_option("--B", B, "Bootstrap replicates")->capture_default_str()->check(CLI::Range(2, 1000000));
  boot->add_option("--n-prime-rule", boot_rule, "Mirror-match subsample size")->capture_default_str();
  boot->add_option("--seed", boot_seed, "Random seed")->capture_default_str();
  boot->add_option("--method", boot_method, "Imputation method")
      ->capture_default_str()
      ->check(CLI::IsMember({"mean", "reg", "nn", "am"}));
  boot->add_option("--y", boot_y, "Column with missing values")->capture_default_str();
  boot->add_option("--x", boot_x, "Covariate columns")->delimiter(',');
  boot->add_option("--level", level, "Confidence level")->capture_default_str();
  boot->add_option("--threads", boot_threads, "Worker threads")->capture_default_str();
  boot->add_flag("--unweighted", unweighted, "Fit imputation models without design weights");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_generate(pop, n, noise_sd, gen_seed, gen_out);
    if (*sim) return cmd_simulate(config_path, sim_threads, sim_seed, sim_out);
    if (*imp)
      return cmd_impute(imp_in, imp_out, imp_method, imp_y, imp_x, imp_weights, imp_rescale,
                        basis_size, imp_summary);
    if (*boot)
      return cmd_bootstrap(boot_in, boot_design, B, boot_rule, boot_seed, boot_method, boot_y,
                           boot_x, !unweighted, level, boot_threads);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
