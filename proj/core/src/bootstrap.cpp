#include "amimpute/bootstrap.hpp"

#include "amimpute/csv.hpp"
#include "amimpute/error.hpp"
#include "amimpute/parallel.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cctype>
#include <cfenv>
#include <cmath>

namespace amimpute {
namespace {

constexpr int kMaxConsecutiveRedraws = 100;

ImputationProblem subset(const ImputationProblem& data, std::span<const std::size_t> positions,
                         std::span<const double> weights) {
  ImputationProblem out;
  const auto n = static_cast<Eigen::Index>(positions.size());
  out.X.resize(n, data.X.cols());
  out.y.resize(positions.size());
  out.responded.resize(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    out.X.row(static_cast<Eigen::Index>(i)) = data.X.row(static_cast<Eigen::Index>(positions[i]));
    out.y[i] = data.y[positions[i]];
    out.responded[i] = data.responded[positions[i]];
  }
  if (!data.weights.empty()) out.weights.assign(weights.begin(), weights.end());
  return out;
}

bool any_respondent(const ImputationProblem& data, std::span<const std::size_t> positions) {
  for (auto p : positions)
    if (data.responded[p]) return true;
  return false;
}

struct ReplicateResult {
  double total = 0.0;
  bool fallback = false;
  int redraws = 0;
};

BootstrapVariance collect(std::vector<ReplicateResult> results) {
  std::vector<double> totals;
  totals.reserve(results.size());
  int fallbacks = 0, redraws = 0;
  for (const auto& r : results) {
    totals.push_back(r.total);
    fallbacks += r.fallback ? 1 : 0;
    redraws += r.redraws;
  }
  BootstrapVariance out = summarize_replicates(std::move(totals));
  out.fallback_count = fallbacks;
  out.redraws = redraws;
  return out;
}

void check_data(const Sample& sample, const ImputationProblem& data, int B) {
  if (B < 2) throw DomainError("bootstrap needs at least 2 replicates");
  if (data.size() != sample.size()) throw DomainError("imputation data does not match the sample");
  if (sample.size() == 0) throw DomainError("empty sample");
}

}  // namespace

BootstrapVariance summarize_replicates(std::vector<double> totals) {
  BootstrapVariance out;
  out.replicates = static_cast<int>(totals.size());
  if (totals.empty()) return out;
  double mean = 0.0;
  for (double t : totals) mean += t;
  mean /= static_cast<double>(totals.size());
  double ss = 0.0;
  for (double t : totals) ss += (t - mean) * (t - mean);
  out.mean_total = mean;
  out.variance = ss / static_cast<double>(totals.size());
  out.replicate_totals = std::move(totals);
  return out;
}

std::size_t pseudopopulation_copies(std::size_t N, std::size_t n) {
  if (n == 0 || n > N) throw DomainError("pseudopopulation needs 1 <= n <= N");
  const int saved = std::fegetround();
  std::fesetround(FE_TONEAREST);
  const double k = std::nearbyint(static_cast<double>(N) / static_cast<double>(n));
  std::fesetround(saved);
  return static_cast<std::size_t>(std::max(1.0, k));
}

Pseudopopulation build_pseudopopulation(const Sample& sample, const ImputationProblem& data) {
  if (data.size() != sample.size()) throw DomainError("imputation data does not match the sample");
  const std::size_t n = sample.size();
  Pseudopopulation pseudo;
  pseudo.copies = pseudopopulation_copies(sample.population_size, n);
  pseudo.source.resize(pseudo.copies * n);
  for (std::size_t u = 0; u < pseudo.source.size(); ++u) pseudo.source[u] = u % n;
  std::vector<double> weights;
  if (!data.weights.empty())
    for (auto p : pseudo.source) weights.push_back(data.weights[p]);
  pseudo.units = subset(data, pseudo.source, weights);
  return pseudo;
}

BootstrapVariance bwo_variance(const Sample& sample, const ImputationProblem& data,
                               const ImputeFn& impute_fn, int B, Rng& rng, int threads) {
  check_data(sample, data, B);
  const std::size_t n = sample.size();
  const std::size_t N = sample.population_size;
  const Pseudopopulation pseudo = build_pseudopopulation(sample, data);
  const double expansion = static_cast<double>(N) / static_cast<double>(n);
  const std::vector<double> weights(n, expansion);
  const std::uint64_t base = rng.next_seed();

  std::vector<ReplicateResult> results(static_cast<std::size_t>(B));
  parallel_for(results.size(), threads, [&](std::size_t b) {
    Rng stream = Rng::stream(base, {b});
    ReplicateResult& res = results[b];
    std::vector<std::size_t> positions;
    for (;;) {
      positions = draw_srswor_indices(pseudo.source.size(), n, stream);
      if (any_respondent(pseudo.units, positions)) break;
      if (++res.redraws >= kMaxConsecutiveRedraws)
        throw NoRespondentsError();
    }
    const ImputationProblem replicate = subset(pseudo.units, positions, weights);
    const ImputedDataset imputed = impute_fn(replicate);
    double sum = 0.0;
    for (double v : imputed.values) sum += v;
    res.total = expansion * sum;
    res.fallback = imputed.used_fallback();
  });
  return collect(std::move(results));
}

NPrimeRule NPrimeRule::parse(const std::string& text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
  NPrimeRule rule;
  if (s == "f*n_h" || s == "f_h*n_h") {
    rule.kind = Kind::SamplingFraction;
    rule.value = 1.0;
    return rule;
  }
  const std::string suffix = "*n_h";
  try {
    std::size_t used = 0;
    if (s.size() > suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0) {
      const std::string head = s.substr(0, s.size() - suffix.size());
      rule.kind = Kind::Fraction;
      rule.value = std::stod(head, &used);
      if (used != head.size()) throw std::invalid_argument(head);
    } else {
      rule.kind = Kind::Fixed;
      rule.value = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
    }
  } catch (const std::exception&) {
    throw ConfigError("cannot parse n_prime_rule '" + text +
                      "' (expected f*n_h, <c>*n_h or a count)");
  }
  if (!(rule.value > 0.0)) throw ConfigError("n_prime_rule must be positive");
  return rule;
}

std::string NPrimeRule::str() const {
  switch (kind) {
    case Kind::SamplingFraction: return "f*n_h";
    case Kind::Fraction: return format_double(value) + "*n_h";
    case Kind::Fixed: return format_double(value);
  }
  return {};
}

double NPrimeRule::evaluate(const StratumDesign& s) const {
  const double nh = static_cast<double>(s.sample_size);
  switch (kind) {
    case Kind::SamplingFraction: return nh * nh / static_cast<double>(s.population_size);
    case Kind::Fraction: return value * nh;
    case Kind::Fixed: return value;
  }
  return 0.0;
}

void check_n_prime_rule(const Sample& sample, const NPrimeRule& rule) {
  if (!sample.stratified()) throw DomainError("mirror-match bootstrap needs a stratified sample");
  for (std::size_t h = 0; h < sample.strata.size(); ++h) {
    const auto& s = sample.strata[h];
    const double v = rule.evaluate(s);
    const std::string where = "stratum " + std::to_string(h + 1);
    if (v < 1.0 || v >= static_cast<double>(s.sample_size))
      throw ConfigError(where + ": n_h' = " + format_double(v) + " outside [1, n_h = " +
                        std::to_string(s.sample_size) + ")");
    if (s.sample_size >= s.population_size)
      throw ConfigError(where + " is fully enumerated; mirror-match needs f_h < 1");
  }
}

MirrorMatchDraw draw_mirror_match(const Sample& sample, const NPrimeRule& rule, Rng& rng) {
  check_n_prime_rule(sample, rule);
  const std::size_t H = sample.strata.size();
  std::vector<std::vector<std::size_t>> members(H);
  for (std::size_t i = 0; i < sample.size(); ++i)
    members[static_cast<std::size_t>(sample.stratum[i] - 1)].push_back(i);

  MirrorMatchDraw draw;
  draw.subsample_sizes.resize(H);
  draw.copies.resize(H);
  draw.stratum_sizes.resize(H);
  for (std::size_t h = 0; h < H; ++h) {
    const auto& s = sample.strata[h];
    const std::size_t nh = members[h].size();
    const std::size_t n_prime = std::max<std::size_t>(1, randomized_round(rule.evaluate(s), rng));
    const double f = static_cast<double>(s.sample_size) / static_cast<double>(s.population_size);
    const double f_star = static_cast<double>(n_prime) / static_cast<double>(nh);
    const double k_real = static_cast<double>(nh) * (1.0 - f_star) /
                          (static_cast<double>(n_prime) * (1.0 - f));
    const std::size_t k = randomized_round(k_real, rng);
    draw.subsample_sizes[h] = n_prime;
    draw.copies[h] = k;
    draw.stratum_sizes[h] = n_prime * k;
    for (std::size_t c = 0; c < k; ++c)
      for (auto idx : draw_srswor_indices(nh, n_prime, rng)) draw.positions.push_back(members[h][idx]);
  }
  draw.total_size = draw.positions.size();
  if (draw.total_size == 0) throw DomainError("mirror-match draw produced an empty sample");
  // N / n* per drawn unit. An extra n_h / n_h' factor would scale every replicate total by
  // 1 / f_h* and leave the bootstrap distribution centred far from the estimate.
  const double scale =
      static_cast<double>(sample.population_size) / static_cast<double>(draw.total_size);
  draw.weights.assign(draw.total_size, scale);
  return draw;
}

BootstrapVariance mmb_variance(const Sample& sample, const ImputationProblem& data,
                               const ImputeFn& impute_fn, const NPrimeRule& rule, int B, Rng& rng,
                               int threads) {
  check_data(sample, data, B);
  check_n_prime_rule(sample, rule);
  const std::uint64_t base = rng.next_seed();

  std::vector<ReplicateResult> results(static_cast<std::size_t>(B));
  parallel_for(results.size(), threads, [&](std::size_t b) {
    Rng stream = Rng::stream(base, {b});
    ReplicateResult& res = results[b];
    MirrorMatchDraw draw;
    for (;;) {
      draw = draw_mirror_match(sample, rule, stream);
      if (any_respondent(data, draw.positions)) break;
      if (++res.redraws >= kMaxConsecutiveRedraws) throw NoRespondentsError();
    }
    const ImputationProblem replicate = subset(data, draw.positions, draw.weights);
    const ImputedDataset imputed = impute_fn(replicate);
    double total = 0.0;
    for (std::size_t i = 0; i < imputed.values.size(); ++i)
      total += draw.weights[i] * imputed.values[i];
    res.total = total;
    res.fallback = imputed.used_fallback();
  });
  return collect(std::move(results));
}

std::pair<double, double> confidence_interval(double total, double variance, double level) {
  if (!(variance >= 0.0)) throw DomainError("variance must be nonnegative");
  if (!(level > 0.0 && level < 1.0)) throw DomainError("confidence level must lie in (0, 1)");
  const boost::math::normal_distribution<double> standard;
  const double z = boost::math::quantile(standard, 0.5 + level / 2.0);
  const double half = z * std::sqrt(variance);
  return {total - half, total + half};
}

}  // namespace amimpute
