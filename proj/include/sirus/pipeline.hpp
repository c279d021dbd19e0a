#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sirus/aggregation.hpp"
#include "sirus/data.hpp"
#include "sirus/forest.hpp"
#include "sirus/rules.hpp"

namespace sirus {

inline constexpr std::size_t kMaxRules = 25;

// Post-treated candidate rules of a forest, most frequent first, with their
// outputs estimated on the training data. The rule set for any threshold p0
// is the prefix of candidates with frequency > p0, because post-treatment
// scans paths in frequency order.
struct CandidateRules {
  std::vector<Rule> rules;
  std::vector<double> frequencies;
  std::size_t degenerate_dropped = 0;

  // Number of leading candidates with frequency > p0.
  std::size_t prefix_size(double p0) const;
};

// Considers paths with frequency > p0_floor until max_rules are kept. A path
// whose rule is degenerate on `train` is dropped before the independence test.
CandidateRules build_candidates(const PathFrequencyTable& table, const QuantileGrid& grid, const Dataset& train,
                                double p0_floor, std::size_t max_rules = kMaxRules);

// Model-size profile of a forest: for every distinct frequency v the number
// of post-treated rules selected with p0 = v, as (v, size) in decreasing v.
std::vector<std::pair<double, std::size_t>> size_profile(const PathFrequencyTable& table, std::size_t stop_above);

// Non-negative ridge over the first `count` candidates, lambda tuned by
// inner cross-validation, zero-weight rules discarded.
SirusModel aggregate(const Dataset& train, const QuantileGrid& grid, const CandidateRules& candidates,
                     std::size_t count, double p0, std::uint64_t seed);

// Full fit: quantile grid, forest, selection at p0, post-treatment, ridge.
SirusModel fit_sirus(const Dataset& data, const ForestParams& params, double p0);

// One cross-validation repetition with a forest grown on each training part.
struct CvFold {
  Dataset train;
  std::vector<std::size_t> test;
  QuantileGrid grid;
  PathFrequencyTable table;
  CandidateRules candidates;
  std::uint64_t ridge_seed = 0;
};

struct CvRun {
  FoldAssignment folds;
  std::vector<CvFold> fold_fits;
};

// Repetition `repeat` of k-fold CV: fold assignment and forest seeds derive
// from (params.seed, repeat). Candidates cover every frequency > p0_floor.
CvRun prepare_cv(const Dataset& data, const ForestParams& params, int k, int repeat, double p0_floor);

struct CvOutcome {
  double error = 0.0;
  double error_macro = 0.0;
  double size = 0.0;
  double size_before_discard = 0.0;
  double stability = 0.0;
  double mean_trees = 0.0;
  std::vector<std::vector<Path>> rule_sets;
};

// Fits SIRUS at each p0 on every fold of the run, reusing its forests.
// Thresholds selecting the same rules on a fold share one ridge fit.
std::vector<CvOutcome> evaluate_cv(const Dataset& data, const CvRun& run, std::span<const double> p0s);
CvOutcome evaluate_cv(const Dataset& data, const CvRun& run, double p0);

}  // namespace sirus
