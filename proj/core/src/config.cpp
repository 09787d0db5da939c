#include "amimpute/config.hpp"

#include "amimpute/bootstrap.hpp"
#include "amimpute/csv.hpp"
#include "amimpute/error.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace amimpute {
namespace {

namespace pt = boost::property_tree;

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = item.find_last_not_of(" \t");
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? ", " : "") + items[i];
  return out;
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "population.ids", "population.size", "population.noise_sd", "population.csv",
      "population.y_column", "population.x_columns", "population.rescale",
      "design.types", "design.rate", "design.strata_vars",
      "response.covariate", "response.b1", "response.target_rate", "response.b0",
      "imputation.methods", "imputation.weighted_mean", "imputation.weighted_reg",
      "imputation.weighted_am",
      "simulation.replicates", "simulation.bootstrap_replicates", "simulation.n_prime_rule",
      "simulation.seed", "simulation.threads", "simulation.failure_budget",
      "spline.basis_size", "spline.lambda_min", "spline.lambda_max", "spline.lambda_count",
      "spline.tol", "spline.max_iter", "spline.reselect_cycles",
      "output.dir"};
  return keys;
}

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  template <class T>
  void get(const std::string& key, T& target) {
    const auto node = tree_.get_optional<std::string>(key);
    if (!node) return;
    try {
      target = convert<T>(*node);
    } catch (const std::exception&) {
      errors_.push_back(key + ": cannot parse '" + *node + "'");
    }
  }

  template <class Fn>
  void get_with(const std::string& key, Fn&& fn) {
    const auto node = tree_.get_optional<std::string>(key);
    if (!node) return;
    try {
      fn(*node);
    } catch (const std::exception& e) {
      errors_.push_back(key + ": " + e.what());
    }
  }

  std::vector<std::string>& errors() { return errors_; }

 private:
  template <class T>
  static T convert(const std::string& s) {
    if constexpr (std::is_same_v<T, bool>) {
      if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
      if (s == "false" || s == "0" || s == "no" || s == "off") return false;
      throw std::invalid_argument(s);
    } else if constexpr (std::is_same_v<T, std::string>) {
      return s;
    } else {
      std::istringstream in(s);
      T value{};
      in >> value;
      if (!in || !(in >> std::ws).eof()) throw std::invalid_argument(s);
      return value;
    }
  }

  const pt::ptree& tree_;
  std::vector<std::string> errors_;
};

}  // namespace

std::string_view design_name(DesignKind kind) {
  return kind == DesignKind::Srswor ? "srswor" : "ss";
}

DesignKind parse_design(std::string_view name) {
  if (name == "srswor") return DesignKind::Srswor;
  if (name == "ss" || name == "stratified") return DesignKind::Stratified;
  throw DomainError("unknown design '" + std::string(name) + "' (expected srswor or ss)");
}

bool ExperimentConfig::weighted(ImputationMethod method) const {
  switch (method) {
    case ImputationMethod::Mean: return weighted_mean;
    case ImputationMethod::Regression: return weighted_regression;
    case ImputationMethod::Additive: return weighted_am;
    case ImputationMethod::NearestNeighbor: return false;
  }
  return false;
}

AmOptions ExperimentConfig::am_options() const {
  AmOptions o = spline;
  o.lambda_grid = log_grid(lambda_min, lambda_max, lambda_count);
  return o;
}

// Drops trailing "; ..." or "# ..." comments; the marker must follow whitespace.
static std::string strip_inline_comments(const std::string& text) {
  std::istringstream lines(text);
  std::string out, line;
  while (std::getline(lines, line)) {
    for (std::size_t i = 1; i < line.size(); ++i)
      if ((line[i] == ';' || line[i] == '#') && std::isspace(static_cast<unsigned char>(line[i - 1]))) {
        line.erase(line.find_last_not_of(" \t", i - 1) + 1);
        break;
      }
    out += line;
    out += '\n';
  }
  return out;
}

ExperimentConfig parse_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(strip_inline_comments(text));
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax error: ") + e.what());
  }

  std::vector<std::string> unknown;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      unknown.push_back(section + " (key outside a section)");
      continue;
    }
    for (const auto& [key, value] : body)
      if (!known_keys().count(section + "." + key)) unknown.push_back(section + "." + key);
  }

  ExperimentConfig c;
  Reader r(tree);
  r.get_with("population.ids", [&](const std::string& s) {
    c.population.synthetic_ids.clear();
    for (const auto& item : split_list(s)) c.population.synthetic_ids.push_back(std::stoi(item));
  });
  r.get("population.size", c.population.size);
  r.get("population.noise_sd", c.population.noise_sd);
  r.get_with("population.csv", [&](const std::string& s) { c.population.csv = s; });
  r.get("population.y_column", c.population.y_column);
  r.get_with("population.x_columns",
             [&](const std::string& s) { c.population.x_columns = split_list(s); });
  r.get("population.rescale", c.population.rescale);

  r.get_with("design.types", [&](const std::string& s) {
    c.design.kinds.clear();
    for (const auto& item : split_list(s)) c.design.kinds.push_back(parse_design(item));
  });
  r.get("design.rate", c.design.rate);
  r.get_with("design.strata_vars",
             [&](const std::string& s) { c.design.strata_vars = split_list(s); });

  r.get("response.covariate", c.response.covariate);
  r.get("response.b1", c.response.b1);
  r.get("response.target_rate", c.response.target_rate);
  r.get_with("response.b0", [&](const std::string& s) {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("cannot parse '" + s + "'");
    c.response.b0 = v;
  });

  r.get_with("imputation.methods", [&](const std::string& s) {
    c.methods.clear();
    for (const auto& item : split_list(s)) c.methods.push_back(parse_method(item));
  });
  r.get("imputation.weighted_mean", c.weighted_mean);
  r.get("imputation.weighted_reg", c.weighted_regression);
  r.get("imputation.weighted_am", c.weighted_am);

  r.get("simulation.replicates", c.replicates);
  r.get("simulation.bootstrap_replicates", c.bootstrap_replicates);
  r.get("simulation.n_prime_rule", c.n_prime_rule);
  r.get("simulation.seed", c.seed);
  r.get("simulation.threads", c.threads);
  r.get("simulation.failure_budget", c.failure_budget);

  r.get("spline.basis_size", c.spline.basis_size);
  r.get("spline.lambda_min", c.lambda_min);
  r.get("spline.lambda_max", c.lambda_max);
  r.get("spline.lambda_count", c.lambda_count);
  r.get("spline.tol", c.spline.tol);
  r.get("spline.max_iter", c.spline.max_iter);
  r.get("spline.reselect_cycles", c.spline.reselect_cycles);

  r.get_with("output.dir", [&](const std::string& s) { c.output_dir = s; });

  auto errors = std::move(r.errors());
  for (const auto& u : unknown) errors.push_back("unknown config key " + u);
  if (!errors.empty()) throw ConfigError("invalid config: " + join(errors));
  if (c.lambda_min > 0.0 && c.lambda_max >= c.lambda_min && c.lambda_count >= 1)
    c.spline.lambda_grid = log_grid(c.lambda_min, c.lambda_max, c.lambda_count);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_ini(const ExperimentConfig& c) {
  std::ostringstream out;
  auto ids = [&] {
    std::vector<std::string> v;
    for (int id : c.population.synthetic_ids) v.push_back(std::to_string(id));
    return join(v);
  };
  auto b = [](bool v) { return v ? "true" : "false"; };
  out << "[population]\n";
  if (c.population.csv.empty()) {
    out << "ids = " << ids() << "\n"
        << "size = " << c.population.size << "\n"
        << "noise_sd = " << format_double(c.population.noise_sd) << "\n";
  } else {
    out << "csv = " << c.population.csv.string() << "\n"
        << "y_column = " << c.population.y_column << "\n"
        << "x_columns = " << join(c.population.x_columns) << "\n"
        << "rescale = " << b(c.population.rescale) << "\n";
  }
  std::vector<std::string> designs;
  for (auto k : c.design.kinds) designs.emplace_back(design_name(k));
  out << "\n[design]\n"
      << "types = " << join(designs) << "\n"
      << "rate = " << format_double(c.design.rate) << "\n"
      << "strata_vars = " << join(c.design.strata_vars) << "\n";
  out << "\n[response]\n"
      << "covariate = " << c.response.covariate << "\n"
      << "b1 = " << format_double(c.response.b1) << "\n"
      << "target_rate = " << format_double(c.response.target_rate) << "\n";
  if (c.response.b0) out << "b0 = " << format_double(*c.response.b0) << "\n";
  std::vector<std::string> methods;
  for (auto m : c.methods) methods.emplace_back(method_name(m));
  out << "\n[imputation]\n"
      << "methods = " << join(methods) << "\n"
      << "weighted_mean = " << b(c.weighted_mean) << "\n"
      << "weighted_reg = " << b(c.weighted_regression) << "\n"
      << "weighted_am = " << b(c.weighted_am) << "\n";
  out << "\n[simulation]\n"
      << "replicates = " << c.replicates << "\n"
      << "bootstrap_replicates = " << c.bootstrap_replicates << "\n"
      << "n_prime_rule = " << c.n_prime_rule << "\n"
      << "seed = " << c.seed << "\n"
      << "failure_budget = " << format_double(c.failure_budget) << "\n";
  out << "\n[spline]\n"
      << "basis_size = " << c.spline.basis_size << "\n"
      << "lambda_min = " << format_double(c.lambda_min) << "\n"
      << "lambda_max = " << format_double(c.lambda_max) << "\n"
      << "lambda_count = " << c.lambda_count << "\n"
      << "tol = " << format_double(c.spline.tol) << "\n"
      << "max_iter = " << c.spline.max_iter << "\n"
      << "reselect_cycles = " << c.spline.reselect_cycles << "\n";
  return out.str();
}

std::vector<std::string> validate_config(const ExperimentConfig& c) {
  std::vector<std::string> e;
  const bool from_csv = !c.population.csv.empty();
  std::vector<std::string> columns;
  if (from_csv) {
    try {
      const CsvTable table = read_csv(c.population.csv);
      if (!table.has_column(c.population.y_column))
        e.push_back("population.y_column: column '" + c.population.y_column + "' not in CSV");
      if (c.population.x_columns.empty()) e.push_back("population.x_columns: empty");
      for (const auto& x : c.population.x_columns)
        if (!table.has_column(x)) e.push_back("population.x_columns: column '" + x + "' not in CSV");
    } catch (const std::exception& ex) {
      e.push_back(std::string("population.csv: ") + ex.what());
    }
    columns = c.population.x_columns;
  } else {
    if (c.population.synthetic_ids.empty()) e.push_back("population.ids: empty");
    for (int id : c.population.synthetic_ids)
      if (id < 1 || id > kSyntheticPopulations)
        e.push_back("population.ids: " + std::to_string(id) + " not in 1..5");
    if (c.population.size < 1) e.push_back("population.size: must be positive");
    if (!(c.population.noise_sd >= 0.0)) e.push_back("population.noise_sd: must be >= 0");
    columns = {"x1", "x2", "x3", "x4"};
  }
  auto has_column = [&](const std::string& name) {
    return std::find(columns.begin(), columns.end(), name) != columns.end();
  };

  if (c.design.kinds.empty()) e.push_back("design.types: empty");
  if (!(c.design.rate > 0.0 && c.design.rate <= 1.0)) e.push_back("design.rate: must lie in (0, 1]");
  const bool stratified =
      std::find(c.design.kinds.begin(), c.design.kinds.end(), DesignKind::Stratified) !=
      c.design.kinds.end();
  if (stratified) {
    if (c.design.strata_vars.empty()) e.push_back("design.strata_vars: empty");
    for (const auto& v : c.design.strata_vars)
      if (!has_column(v)) e.push_back("design.strata_vars: unknown covariate '" + v + "'");
  }

  if (!has_column(c.response.covariate))
    e.push_back("response.covariate: unknown covariate '" + c.response.covariate + "'");
  if (!c.response.b0 && !(c.response.target_rate > 0.0 && c.response.target_rate < 1.0))
    e.push_back("response.target_rate: must lie in (0, 1)");

  if (c.methods.empty()) e.push_back("imputation.methods: empty");
  if (c.replicates < 1) e.push_back("simulation.replicates: must be >= 1");
  if (c.bootstrap_replicates < 0 || c.bootstrap_replicates == 1)
    e.push_back("simulation.bootstrap_replicates: must be 0 or >= 2");
  try {
    NPrimeRule::parse(c.n_prime_rule);
  } catch (const std::exception& ex) {
    e.push_back(std::string("simulation.n_prime_rule: ") + ex.what());
  }
  if (c.threads < 1) e.push_back("simulation.threads: must be >= 1");
  if (!(c.failure_budget >= 0.0 && c.failure_budget < 1.0))
    e.push_back("simulation.failure_budget: must lie in [0, 1)");

  if (c.spline.basis_size < 4) e.push_back("spline.basis_size: must be >= 4");
  if (!(c.lambda_min > 0.0)) e.push_back("spline.lambda_min: must be positive");
  if (!(c.lambda_max >= c.lambda_min)) e.push_back("spline.lambda_max: must be >= lambda_min");
  if (c.lambda_count < 1) e.push_back("spline.lambda_count: must be >= 1");
  if (!(c.spline.tol > 0.0)) e.push_back("spline.tol: must be positive");
  if (c.spline.max_iter < 1) e.push_back("spline.max_iter: must be >= 1");
  if (c.spline.reselect_cycles < 0) e.push_back("spline.reselect_cycles: must be >= 0");
  return e;
}

}  // namespace amimpute
