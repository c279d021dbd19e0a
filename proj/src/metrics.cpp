#include "sirus/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include "json.hpp"
#include <sstream>

#include "sirus/error.hpp"
#include "sirus/pipeline.hpp"

namespace sirus {

double dice_sorensen(std::span<const Path> a, std::span<const Path> b) {
  std::vector<Path> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  sa.erase(std::unique(sa.begin(), sa.end()), sa.end());
  std::sort(sb.begin(), sb.end());
  sb.erase(std::unique(sb.begin(), sb.end()), sb.end());
  if (sa.empty() && sb.empty()) return 1.0;
  std::vector<Path> common;
  std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(common));
  return 2.0 * static_cast<double>(common.size()) / static_cast<double>(sa.size() + sb.size());
}

double unexplained_variance(std::span<const double> predictions, std::span<const double> truth) {
  if (predictions.size() != truth.size()) throw Error(ErrorKind::Data, "prediction and truth lengths differ");
  if (truth.size() < 2) throw Error(ErrorKind::Data, "unexplained variance needs at least 2 points");
  const double n = static_cast<double>(truth.size());
  double mean = 0;
  for (double y : truth) mean += y;
  mean /= n;
  double var = 0, mse = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    var += (truth[i] - mean) * (truth[i] - mean);
    mse += (predictions[i] - truth[i]) * (predictions[i] - truth[i]);
  }
  if (!(var > 0)) throw Error(ErrorKind::Data, "response has zero variance");
  return mse / var;
}

StabilityReport stability_report(std::vector<std::vector<Path>> rule_sets) {
  StabilityReport r;
  for (std::size_t a = 0; a < rule_sets.size(); ++a)
    for (std::size_t b = a + 1; b < rule_sets.size(); ++b) r.pairwise.push_back(dice_sorensen(rule_sets[a], rule_sets[b]));
  if (!r.pairwise.empty()) {
    double s = 0;
    for (double d : r.pairwise) s += d;
    r.mean_dice = s / static_cast<double>(r.pairwise.size());
  }
  r.rule_sets = std::move(rule_sets);
  return r;
}

EvaluationReport cv_evaluate(const Dataset& data, double p0, const ForestParams& params, int k, int repeats) {
  if (k < 2) throw Error(ErrorKind::Config, "at least 2 folds are required");
  if (repeats < 1) throw Error(ErrorKind::Config, "repeats must be positive");
  const auto start = std::chrono::steady_clock::now();
  EvaluationReport rep;
  rep.p0 = p0;
  rep.folds = k;
  rep.repeats = repeats;
  rep.seed = params.seed;
  for (int r = 0; r < repeats; ++r) {
    const auto run = prepare_cv(data, params, k, r, p0);
    const auto out = evaluate_cv(data, run, p0);
    rep.error += out.error;
    rep.error_macro += out.error_macro;
    rep.model_size += out.size;
    rep.model_size_before_discard += out.size_before_discard;
    rep.stability += out.stability;
    rep.mean_trees += out.mean_trees;
    rep.repeat_errors.push_back(out.error);
    rep.repeat_stability.push_back(out.stability);
  }
  const double m = repeats;
  rep.error /= m;
  rep.error_macro /= m;
  rep.model_size /= m;
  rep.model_size_before_discard /= m;
  rep.stability /= m;
  rep.mean_trees /= m;
  rep.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

std::string to_json(const EvaluationReport& r) {
  nlohmann::json j = {{"dataset", r.dataset},
                      {"p0", r.p0},
                      {"folds", r.folds},
                      {"repeats", r.repeats},
                      {"seed", r.seed},
                      {"error", r.error},
                      {"error_macro", r.error_macro},
                      {"size", r.model_size},
                      {"size_before_discard", r.model_size_before_discard},
                      {"stability", r.stability},
                      {"mean_trees", r.mean_trees},
                      {"runtime_seconds", r.runtime_seconds},
                      {"repeat_errors", r.repeat_errors},
                      {"repeat_stability", r.repeat_stability}};
  return j.dump(2);
}

std::string csv_header() { return "dataset,p0,size,stability,error,M,seed"; }

std::string to_csv_row(const EvaluationReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << r.dataset << ',' << r.p0 << ',' << r.model_size << ',' << r.stability << ',' << r.error << ','
     << r.mean_trees << ',' << r.seed;
  return os.str();
}

}  // namespace sirus
