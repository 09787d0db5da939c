#include "amimpute/runner.hpp"

#include "amimpute/csv.hpp"
#include "amimpute/error.hpp"
#include "amimpute/imputation.hpp"
#include "amimpute/parallel.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

namespace amimpute {
namespace {

constexpr std::uint64_t kPopulationStream = 0x706f70;  // "pop"
constexpr std::uint64_t kReplicateStream = 0x726570;   // "rep"

std::string join_errors(const std::vector<std::string>& errors) {
  std::string out;
  for (const auto& e : errors) out += "\n  " + e;
  return out;
}

std::string fmt_or_na(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

template <class Fn>
std::optional<double> try_measure(Fn&& fn) {
  try {
    return fn();
  } catch (const DomainError&) {
    return std::nullopt;
  }
}

}  // namespace

Experiment::Experiment(ExperimentConfig config) : config_(std::move(config)) {
  const auto errors = validate_config(config_);
  if (!errors.empty()) throw ConfigError("invalid config:" + join_errors(errors));

  std::vector<PreparedPopulation> prepared;
  if (!config_.population.csv.empty()) {
    PreparedPopulation p;
    p.pop = load_csv(config_.population.csv, config_.population.y_column,
                     config_.population.x_columns, config_.population.rescale);
    p.label = config_.population.csv.stem().string();
    p.key = 0;
    prepared.push_back(std::move(p));
  } else {
    for (int id : config_.population.synthetic_ids) {
      PreparedPopulation p;
      const auto key = static_cast<std::uint64_t>(id);
      p.pop = generate_synthetic(id, config_.population.size, config_.population.noise_sd,
                                 Rng::derive_seed(config_.seed, {kPopulationStream, key}));
      p.label = std::to_string(id);
      p.key = key;
      prepared.push_back(std::move(p));
    }
  }

  const bool stratified = std::find(config_.design.kinds.begin(), config_.design.kinds.end(),
                                    DesignKind::Stratified) != config_.design.kinds.end();
  for (auto& p : prepared) {
    p.total = population_total(p.pop);
    const std::size_t cov = p.pop.covariate_index(config_.response.covariate);
    if (config_.response.b0)
      p.response = LogisticResponseModel{*config_.response.b0, config_.response.b1, cov};
    else
      p.response = calibrate_intercept(p.pop, cov, config_.response.b1, config_.response.target_rate);
    if (stratified) {
      std::vector<std::size_t> vars;
      for (const auto& name : config_.design.strata_vars) vars.push_back(p.pop.covariate_index(name));
      p.strata = stratify_by_medians(p.pop, vars);
    }
  }
  populations_ = std::move(prepared);
}

std::size_t Experiment::cell_count() const {
  return populations_.size() * config_.design.kinds.size();
}

std::string Experiment::cell_population(std::size_t cell) const {
  return populations_.at(cell / config_.design.kinds.size()).label;
}

DesignKind Experiment::cell_design(std::size_t cell) const {
  return config_.design.kinds.at(cell % config_.design.kinds.size());
}

const Population& Experiment::population(std::size_t cell) const {
  return populations_.at(cell / config_.design.kinds.size()).pop;
}

const LogisticResponseModel& Experiment::response_model(std::size_t cell) const {
  return populations_.at(cell / config_.design.kinds.size()).response;
}

ReplicateRecord Experiment::run_replicate(std::size_t cell, std::size_t index,
                                          int inner_threads) const {
  const auto start = std::chrono::steady_clock::now();
  const PreparedPopulation& prep = populations_.at(cell / config_.design.kinds.size());
  const DesignKind design = cell_design(cell);
  const Population& pop = prep.pop;

  ReplicateRecord record;
  record.index = index;
  try {
    Rng rng = Rng::stream(config_.seed, {kReplicateStream, prep.key,
                                         static_cast<std::uint64_t>(design), index});
    Sample sample;
    if (design == DesignKind::Srswor) {
      const auto n = static_cast<std::size_t>(
          std::llround(config_.design.rate * static_cast<double>(pop.size())));
      sample = srswor(pop.size(), std::max<std::size_t>(n, 1), rng);
    } else {
      sample = stratified_sample(*prep.strata, config_.design.rate, rng);
    }
    const ResponseSet response = draw_response(sample, prep.response, pop, rng);
    const auto missing = response.nonrespondents();
    std::vector<double> truth;
    truth.reserve(missing.size());
    for (auto i : missing) truth.push_back(pop.y(static_cast<Eigen::Index>(sample.units[i])));

    const AmOptions am = config_.am_options();
    const ImputationProblem weighted = make_problem(pop, sample, response, true);
    ImputationProblem unweighted = weighted;
    unweighted.weights.clear();

    for (auto method : config_.methods) {
      const ImputationProblem& problem = config_.weighted(method) ? weighted : unweighted;
      const ImputedDataset imputed = impute(method, problem, am);
      ReplicateOutcome outcome;
      outcome.total = imputed_total(sample, imputed);
      std::vector<double> predicted;
      predicted.reserve(missing.size());
      for (auto i : missing) predicted.push_back(imputed.values[i]);
      const PredictionErrors errors = prediction_errors(predicted, truth);
      outcome.abs_rel_error_sum = errors.abs_rel_error_sum;
      outcome.predicted = errors.predicted;
      outcome.zero_y_excluded = errors.zero_y_excluded;
      outcome.fallback = imputed.used_fallback();

      if (method == ImputationMethod::Additive && config_.bootstrap_replicates > 0) {
        const ImputeFn fn = [&am](const ImputationProblem& p) { return impute_am(p, am); };
        const BootstrapVariance bv =
            design == DesignKind::Srswor
                ? bwo_variance(sample, problem, fn, config_.bootstrap_replicates, rng, inner_threads)
                : mmb_variance(sample, problem, fn, NPrimeRule::parse(config_.n_prime_rule),
                               config_.bootstrap_replicates, rng, inner_threads);
        outcome.boot_variance = bv.variance;
        record.bootstrap_fallbacks = bv.fallback_count;
      }
      record.outcomes.push_back(outcome);
      record.fallbacks.push_back(imputed.fallback);
    }
  } catch (const std::exception& e) {
    record.failed = true;
    record.error = e.what();
    record.outcomes.clear();
    record.fallbacks.clear();
  }
  record.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return record;
}

CellResult Experiment::run_cell(std::size_t cell) const {
  const auto L = static_cast<std::size_t>(config_.replicates);
  CellResult out;
  out.population = cell_population(cell);
  out.design = cell_design(cell);
  out.records.resize(L);

  // Few outer replicates: hand the workers to the bootstrap loop instead.
  const bool outer = L >= static_cast<std::size_t>(config_.threads);
  const int outer_threads = outer ? config_.threads : 1;
  const int inner_threads = outer ? 1 : config_.threads;
  parallel_for(L, outer_threads, [&](std::size_t l) {
    out.records[l] = run_replicate(cell, l, inner_threads);
  });

  for (const auto& r : out.records) out.failures += r.failed ? 1 : 0;
  if (static_cast<double>(out.failures) > config_.failure_budget * static_cast<double>(L)) {
    std::string first;
    for (const auto& r : out.records)
      if (r.failed) {
        first = "replicate " + std::to_string(r.index) + ": " + r.error;
        break;
      }
    throw std::runtime_error(std::to_string(out.failures) + " of " + std::to_string(L) +
                             " replicates failed for population " + out.population + " (" +
                             std::string(design_name(out.design)) + "); first " + first);
  }

  out.result.true_total = populations_.at(cell / config_.design.kinds.size()).total;
  for (std::size_t m = 0; m < config_.methods.size(); ++m) {
    MethodResults mr;
    mr.method = std::string(method_name(config_.methods[m]));
    for (const auto& r : out.records)
      if (!r.failed) mr.replicates.push_back(r.outcomes[m]);
    out.result.methods.push_back(std::move(mr));
  }
  return out;
}

StudyResult Experiment::run() const {
  StudyResult study;
  for (std::size_t c = 0; c < cell_count(); ++c) study.cells.push_back(run_cell(c));
  return study;
}

StudyResult run_study(const ExperimentConfig& config) { return Experiment(config).run(); }

void write_results(const StudyResult& study, const ExperimentConfig& config,
                   const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  CsvTable measures_csv;
  measures_csv.header = {"population", "design", "method", "MRPE", "RB", "RRVAR", "RRMSE"};
  CsvTable variance_csv;
  variance_csv.header = {"population", "design", "VAR", "VAR_boot", "CR"};
  CsvTable replicates_csv;
  replicates_csv.header = {"population", "design", "replicate", "method", "total",
                           "abs_rel_error_sum", "predicted", "boot_variance", "fallback"};
  CsvTable failures_csv;
  failures_csv.header = {"population", "design", "replicate", "error"};

  for (const auto& cell : study.cells) {
    const std::string design(design_name(cell.design));
    const double Y = cell.result.true_total;
    for (const auto& m : cell.result.methods) {
      const auto rb = try_measure([&] { return relative_bias(m, Y); });
      const auto rrvar = try_measure([&] { return relative_root_variance(m, Y); });
      const auto rrmse = try_measure([&] { return relative_rmse(m, Y); });
      measures_csv.rows.push_back({cell.population, design, m.method, format_double(mrpe(m)),
                                   fmt_or_na(rb), fmt_or_na(rrvar), fmt_or_na(rrmse)});
      if (m.method == "am" && config.bootstrap_replicates > 0 && m.replicates.size() >= 2) {
        const auto s = bootstrap_summary(m, Y);
        variance_csv.rows.push_back({cell.population, design, format_double(s.var),
                                     format_double(s.var_boot), format_double(s.coverage)});
      }
    }
    for (const auto& r : cell.records) {
      if (r.failed) {
        std::string msg = r.error;
        for (auto& ch : msg)
          if (ch == ',' || ch == '\n') ch = ';';
        failures_csv.rows.push_back({cell.population, design, std::to_string(r.index), msg});
        continue;
      }
      for (std::size_t k = 0; k < r.outcomes.size(); ++k) {
        const auto& o = r.outcomes[k];
        replicates_csv.rows.push_back(
            {cell.population, design, std::to_string(r.index),
             std::string(method_name(config.methods[k])), format_double(o.total),
             format_double(o.abs_rel_error_sum), std::to_string(o.predicted),
             fmt_or_na(o.boot_variance), r.fallbacks[k].empty() ? "" : r.fallbacks[k]});
      }
    }
  }

  CsvTable ranks_csv;
  ranks_csv.header = {"design", "method", "MRPE", "RB", "RRVAR", "RRMSE"};
  if (config.methods.size() >= 2 && config.replicates >= 2) {
    for (auto kind : config.design.kinds) {
      std::vector<PopulationMeasures> pops;
      try {
        for (const auto& cell : study.cells) {
          if (cell.design != kind) continue;
          PopulationMeasures pm;
          pm.population = cell.population;
          for (const auto& m : cell.result.methods) {
            pm.methods.push_back(m.method);
            pm.values.push_back(measures(m, cell.result.true_total));
          }
          pops.push_back(std::move(pm));
        }
      } catch (const DomainError&) {
        continue;
      }
      if (pops.empty()) continue;
      for (const auto& row : rank_methods(pops))
        ranks_csv.rows.push_back({std::string(design_name(kind)), row.method,
                                  format_double(row.ranks.mrpe), format_double(row.ranks.rb),
                                  format_double(row.ranks.rrvar), format_double(row.ranks.rrmse)});
    }
  }

  write_csv(dir / "measures.csv", measures_csv);
  if (config.bootstrap_replicates > 0) write_csv(dir / "variance.csv", variance_csv);
  write_csv(dir / "ranks.csv", ranks_csv);
  write_csv(dir / "replicates.csv", replicates_csv);
  if (!failures_csv.rows.empty()) write_csv(dir / "failures.csv", failures_csv);
  std::ofstream(dir / "config.ini") << to_ini(config);
}

StudyResult run_experiment(const ExperimentConfig& config) {
  StudyResult study = run_study(config);
  write_results(study, config, config.output_dir);
  return study;
}

}  // namespace amimpute
