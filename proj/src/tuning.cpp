#include "sirus/tuning.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

#include "sirus/error.hpp"
#include "sirus/pipeline.hpp"

namespace sirus {

double binomial_cdf(std::int64_t k, std::int64_t m, double prob) {
  if (m < 0) throw Error(ErrorKind::Config, "binomial trial count must be non-negative");
  if (k < 0) return 0.0;
  if (k >= m || prob <= 0.0) return 1.0;
  if (prob >= 1.0) return 0.0;

  // Chernoff bound: P(X <= k) <= exp(-m KL(k/m || prob)) for k below the mean,
  // symmetrically above it.
  const double mean = static_cast<double>(m) * prob;
  const double frac = static_cast<double>(k) / static_cast<double>(m);
  auto kl = [&](double a) {
    double d = 0;
    if (a > 0) d += a * std::log(a / prob);
    if (a < 1) d += (1 - a) * std::log((1 - a) / (1 - prob));
    return d;
  };
  constexpr double kTailExponent = 60.0;  // exp(-60) < 1e-26
  if (static_cast<double>(k) < mean && static_cast<double>(m) * kl(frac) > kTailExponent) return 0.0;
  const double frac_up = static_cast<double>(k + 1) / static_cast<double>(m);
  if (static_cast<double>(k + 1) > mean && static_cast<double>(m) * kl(frac_up) > kTailExponent) return 1.0;

  // Terms relative to the mode, summed outward until negligible.
  const double odds = prob / (1.0 - prob);
  const auto mode = std::min<std::int64_t>(m, static_cast<std::int64_t>(std::floor(static_cast<double>(m + 1) * prob)));
  double lower = 0, upper = 0;
  auto add = [&](std::int64_t i, double t) { (i <= k ? lower : upper) += t; };
  add(mode, 1.0);
  constexpr double kNegligible = 1e-20;
  double t = 1.0;
  for (std::int64_t i = mode; i < m; ++i) {
    t *= static_cast<double>(m - i) / static_cast<double>(i + 1) * odds;
    add(i + 1, t);
    if (t < kNegligible * (lower + upper)) break;
  }
  t = 1.0;
  for (std::int64_t i = mode; i > 0; --i) {
    t *= static_cast<double>(i) / static_cast<double>(m - i + 1) / odds;
    add(i - 1, t);
    if (t < kNegligible * (lower + upper)) break;
  }
  const double total = lower + upper;
  return lower <= upper ? lower / total : 1.0 - upper / total;
}

namespace {

std::map<std::int64_t, std::int64_t> count_multiplicity(const PathFrequencyTable& table) {
  std::map<std::int64_t, std::int64_t> multiplicity;
  for (const auto& [path, count] : table.counts()) ++multiplicity[count];
  return multiplicity;
}

double epsilon_from_counts(const std::map<std::int64_t, std::int64_t>& multiplicity, std::int64_t m, double p0) {
  const auto k = static_cast<std::int64_t>(std::floor(static_cast<double>(m) * p0 + 1e-9));
  double num = 0, den = 0;
  for (const auto& [count, mult] : multiplicity) {
    const double z = binomial_cdf(k, m, static_cast<double>(count) / static_cast<double>(m));
    num += static_cast<double>(mult) * z * (1 - z);
    den += static_cast<double>(mult) * (1 - z);
  }
  return den > 0 ? num / den : 0.0;
}

}  // namespace

double stopping_epsilon(const PathFrequencyTable& table, double p0) {
  if (table.empty() || table.num_trees() <= 0) return 0.0;
  return epsilon_from_counts(count_multiplicity(table), table.num_trees(), p0);
}

std::vector<double> epsilon_grid(const PathFrequencyTable& table) {
  std::vector<double> grid;
  for (const auto& [v, size] : size_profile(table, kMaxRules))
    if (size >= 1 && size <= kMaxRules) grid.push_back(v);
  if (grid.empty()) {
    const double m = static_cast<double>(table.num_trees());
    for (const auto& [path, count] : table.counts()) grid.push_back(static_cast<double>(count) / m);
    std::sort(grid.begin(), grid.end(), std::greater<>());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  }
  return grid;
}

double mean_stopping_epsilon(const PathFrequencyTable& table) {
  if (table.empty()) return 0.0;
  const auto grid = epsilon_grid(table);
  const auto multiplicity = count_multiplicity(table);
  double s = 0;
  for (double p0 : grid) s += epsilon_from_counts(multiplicity, table.num_trees(), p0);
  return s / static_cast<double>(grid.size());
}

AdaptiveResult adaptive_num_trees(const Dataset& data, const QuantileGrid& grid, const ForestParams& params) {
  params.validate(data.p());
  const auto& a = params.adaptive;
  BinnedData binned(data, grid);
  AdaptiveResult res;
  std::int64_t m = 0;
  while (true) {
    const auto batch = std::min<std::int64_t>(a.batch_size, a.max_trees - m);
    grow_trees(binned, params, m, batch, res.table);
    m += batch;
    res.epsilon = mean_stopping_epsilon(res.table);
    if (res.epsilon < a.alpha) break;
    if (m >= a.max_trees) {
      res.hit_cap = true;
      break;
    }
  }
  res.num_trees = m;
  return res;
}

double pareto_distance(double error, double stability) {
  return std::sqrt(error * error + (stability - 0.9) * (stability - 0.9));
}

std::size_t pareto_argmin(std::span<const ParetoPoint> points) {
  if (points.empty()) throw Error(ErrorKind::Runtime, "empty Pareto front");
  std::size_t best = 0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    const auto& a = points[i];
    const auto& b = points[best];
    if (a.distance < b.distance || (a.distance == b.distance && (a.size < b.size || (a.size == b.size && a.p0 > b.p0))))
      best = i;
  }
  return best;
}

TuningResult tune_p0(const Dataset& data, const ForestParams& params, int k, int repeats) {
  if (k < 2) throw Error(ErrorKind::Config, "at least 2 folds are required");
  if (repeats < 1) throw Error(ErrorKind::Config, "repeats must be positive");
  params.validate(data.p());
  const auto start = std::chrono::steady_clock::now();
  TuningResult res;

  const auto grid = compute_quantile_grid(data, params.q);
  const auto table = grow_forest(data, grid, params);
  res.forests_grown = 1;
  res.full_data_trees = table.num_trees();
  std::vector<double> p0s;
  for (const auto& [v, size] : size_profile(table, kMaxRules))
    if (size >= 1 && size <= kMaxRules) p0s.push_back(v);
  if (p0s.empty()) throw Error(ErrorKind::Data, "no threshold p0 selects between 1 and 25 rules");

  std::vector<std::vector<CvOutcome>> outcomes;
  for (int r = 0; r < repeats; ++r) {
    const auto run = prepare_cv(data, params, k, r, p0s.back());
    res.forests_grown += k;
    auto outs = evaluate_cv(data, run, p0s);
    std::vector<ParetoPoint> points;
    for (std::size_t i = 0; i < p0s.size(); ++i)
      points.push_back({p0s[i], outs[i].size, outs[i].error, outs[i].stability,
                        pareto_distance(outs[i].error, outs[i].stability)});
    res.repeat_p0.push_back(p0s[pareto_argmin(points)]);
    res.repeat_points.push_back(std::move(points));
    for (auto& o : outs) o.rule_sets.clear();
    outcomes.push_back(std::move(outs));
  }

  auto sorted = res.repeat_p0;
  std::sort(sorted.begin(), sorted.end());
  res.p0 = sorted[(sorted.size() - 1) / 2];

  for (std::size_t i = 0; i < p0s.size(); ++i) {
    ParetoPoint avg{p0s[i], 0, 0, 0, 0};
    for (const auto& pts : res.repeat_points) {
      avg.size += pts[i].size;
      avg.error += pts[i].error;
      avg.stability += pts[i].stability;
    }
    avg.size /= repeats;
    avg.error /= repeats;
    avg.stability /= repeats;
    avg.distance = pareto_distance(avg.error, avg.stability);
    res.pareto.push_back(avg);
  }

  const auto chosen = static_cast<std::size_t>(std::find(p0s.begin(), p0s.end(), res.p0) - p0s.begin());
  auto& ev = res.evaluation;
  ev.p0 = res.p0;
  ev.folds = k;
  ev.repeats = repeats;
  ev.seed = params.seed;
  for (const auto& outs : outcomes) {
    const auto& o = outs[chosen];
    ev.error += o.error / repeats;
    ev.error_macro += o.error_macro / repeats;
    ev.model_size += o.size / repeats;
    ev.model_size_before_discard += o.size_before_discard / repeats;
    ev.stability += o.stability / repeats;
    ev.mean_trees += o.mean_trees / repeats;
    ev.repeat_errors.push_back(o.error);
    ev.repeat_stability.push_back(o.stability);
  }
  ev.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

void write_pareto_csv(std::ostream& out, std::span<const ParetoPoint> points) {
  const auto old = out.precision(17);
  out << "p0,size,error,stability,distance\n";
  for (const auto& p : points) out << p.p0 << ',' << p.size << ',' << p.error << ',' << p.stability << ',' << p.distance << '\n';
  out.precision(old);
}

}  // namespace sirus
