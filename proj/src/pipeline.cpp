#include "sirus/pipeline.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "sirus/error.hpp"
#include "sirus/metrics.hpp"
#include "sirus/parallel.hpp"

namespace sirus {

namespace {

constexpr std::uint64_t kFoldStream = 0x666f6c6473ULL;
constexpr std::uint64_t kFoldForestStream = 0x66666f72ULL;
constexpr std::uint64_t kRidgeStream = 0x7269646765ULL;

double mean(std::span<const double> v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double variance(std::span<const double> v) {
  const double m = mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

std::size_t CandidateRules::prefix_size(double p0) const {
  std::size_t k = 0;
  while (k < frequencies.size() && frequencies[k] > p0) ++k;
  return k;
}

CandidateRules build_candidates(const PathFrequencyTable& table, const QuantileGrid& grid, const Dataset& train,
                                double p0_floor, std::size_t max_rules) {
  CandidateRules out;
  IndependenceFilter filter;
  const double m = static_cast<double>(table.num_trees());
  for (const auto& [path, count] : table.sorted()) {
    if (out.rules.size() >= max_rules) break;
    const double freq = static_cast<double>(count) / m;
    if (!(freq > p0_floor)) break;
    Rule rule;
    try {
      rule = rule_from_path(path, grid, train);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DegenerateRule) throw;
      ++out.degenerate_dropped;
      continue;
    }
    if (!filter.try_add(path)) continue;
    out.rules.push_back(std::move(rule));
    out.frequencies.push_back(freq);
  }
  return out;
}

std::vector<std::pair<double, std::size_t>> size_profile(const PathFrequencyTable& table, std::size_t stop_above) {
  std::vector<std::pair<double, std::size_t>> out;
  if (table.empty()) return out;
  const double m = static_cast<double>(table.num_trees());
  std::vector<std::pair<const Path*, std::int64_t>> sorted;
  sorted.reserve(table.size());
  for (const auto& [path, count] : table.counts()) sorted.emplace_back(&path, count);
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  IndependenceFilter filter;
  std::size_t i = 0;
  while (i < sorted.size()) {
    const auto count = sorted[i].second;
    // p0 = count / M selects exactly the paths before this group.
    out.emplace_back(static_cast<double>(count) / m, filter.accepted());
    if (filter.accepted() > stop_above) break;
    for (; i < sorted.size() && sorted[i].second == count; ++i) filter.try_add(*sorted[i].first);
  }
  return out;
}

SirusModel aggregate(const Dataset& train, const QuantileGrid& grid, const CandidateRules& candidates,
                     std::size_t count, double p0, std::uint64_t seed) {
  count = std::min(count, candidates.rules.size());
  SirusModel model;
  model.schema = train.schema();
  model.response_name = train.response_name();
  model.response_mean = mean(train.response());
  model.grid = grid;
  model.p0 = p0;
  model.intercept = model.response_mean;
  if (count == 0) return model;

  std::span<const Rule> rules(candidates.rules.data(), count);
  const auto lambdas = default_lambda_grid(variance(train.response()));
  const int k = static_cast<int>(std::min<std::size_t>(10, train.n()));
  model.lambda = tune_lambda(rules, train, kfold_split(train.n(), k, seed), lambdas);
  const auto fit = fit_nn_ridge(build_design(rules, train), model.lambda);
  model.intercept = fit.intercept;
  model.rules_before_discard = count;
  for (std::size_t r = 0; r < count; ++r) {
    const double w = fit.weights(static_cast<Eigen::Index>(r));
    if (w > 0) {
      model.rules.push_back(rules[r]);
      model.weights.push_back(w);
      model.frequencies.push_back(candidates.frequencies[r]);
    }
  }
  return model;
}

SirusModel fit_sirus(const Dataset& data, const ForestParams& params, double p0) {
  if (!(p0 >= 0.0 && p0 < 1.0)) throw Error(ErrorKind::Config, "p0 must lie in [0, 1)");
  params.validate(data.p());
  const auto grid = compute_quantile_grid(data, params.q);
  const auto table = grow_forest(data, grid, params);
  const auto candidates = build_candidates(table, grid, data, p0);
  auto model = aggregate(data, grid, candidates, candidates.rules.size(), p0,
                         derive_seed(params.seed, kRidgeStream, ~std::uint64_t{0}));
  model.num_trees = table.num_trees();
  return model;
}

CvRun prepare_cv(const Dataset& data, const ForestParams& params, int k, int repeat, double p0_floor) {
  params.validate(data.p());
  CvRun run;
  run.folds = kfold_split(data.n(), k, derive_seed(params.seed, kFoldStream, static_cast<std::uint64_t>(repeat)));
  run.fold_fits.resize(static_cast<std::size_t>(k));
  parallel_for(static_cast<std::size_t>(k), [&](std::size_t f) {
    auto& fit = run.fold_fits[f];
    const auto index = static_cast<std::uint64_t>(repeat) * static_cast<std::uint64_t>(k) + f;
    fit.train = data.subset(run.folds.train_indices(static_cast<int>(f)));
    fit.test = run.folds.test_indices(static_cast<int>(f));
    fit.grid = compute_quantile_grid(fit.train, params.q);
    ForestParams fp = params;
    fp.seed = derive_seed(params.seed, kFoldForestStream, index);
    fit.table = grow_forest(fit.train, fit.grid, fp);
    fit.candidates = build_candidates(fit.table, fit.grid, fit.train, p0_floor);
    fit.ridge_seed = derive_seed(params.seed, kRidgeStream, index);
  });
  return run;
}

std::vector<CvOutcome> evaluate_cv(const Dataset& data, const CvRun& run, std::span<const double> p0s) {
  const std::size_t k = run.fold_fits.size();
  // models[f][c]: ridge fit on the first c candidates of fold f.
  std::vector<std::map<std::size_t, SirusModel>> models(k);
  parallel_for(k, [&](std::size_t f) {
    const auto& fit = run.fold_fits[f];
    for (double p0 : p0s) {
      const auto count = fit.candidates.prefix_size(p0);
      if (!models[f].count(count))
        models[f].emplace(count, aggregate(fit.train, fit.grid, fit.candidates, count, p0, fit.ridge_seed));
    }
  });

  std::vector<CvOutcome> outcomes;
  std::vector<double> pred(data.n(), 0.0), fp, ft;
  for (double p0 : p0s) {
    CvOutcome out;
    double macro = 0;
    int macro_count = 0;
    for (std::size_t f = 0; f < k; ++f) {
      const auto& fit = run.fold_fits[f];
      const auto& model = models[f].at(fit.candidates.prefix_size(p0));
      fp.clear();
      ft.clear();
      for (auto i : fit.test) {
        pred[i] = predict(model, data.row(i));
        fp.push_back(pred[i]);
        ft.push_back(data.response()[i]);
      }
      if (ft.size() >= 2 && variance(ft) > 0) {
        macro += unexplained_variance(fp, ft);
        ++macro_count;
      }
      out.size += static_cast<double>(model.size());
      out.size_before_discard += static_cast<double>(model.rules_before_discard);
      out.mean_trees += static_cast<double>(fit.table.num_trees());
      out.rule_sets.push_back(model.paths());
    }
    out.error = unexplained_variance(pred, data.response());
    out.error_macro = macro_count ? macro / macro_count : out.error;
    out.size /= static_cast<double>(k);
    out.size_before_discard /= static_cast<double>(k);
    out.mean_trees /= static_cast<double>(k);
    out.stability = stability_report(out.rule_sets).mean_dice;
    outcomes.push_back(std::move(out));
  }
  return outcomes;
}

CvOutcome evaluate_cv(const Dataset& data, const CvRun& run, double p0) {
  return std::move(evaluate_cv(data, run, std::span<const double>(&p0, 1)).front());
}

}  // namespace sirus
