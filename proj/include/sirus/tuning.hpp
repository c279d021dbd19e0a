#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "sirus/data.hpp"
#include "sirus/forest.hpp"
#include "sirus/metrics.hpp"
#include "sirus/rules.hpp"

namespace sirus {

// P(X <= k) for X ~ Binomial(m, prob).
double binomial_cdf(std::int64_t k, std::int64_t m, double prob);

// Expected proportion of rules not shared by two forests of the table's size
// at threshold p0, with each path probability replaced by its frequency.
double stopping_epsilon(const PathFrequencyTable& table, double p0);

// Distinct frequencies whose post-treated selection has 1 to 25 rules; all
// distinct frequencies when none qualifies.
std::vector<double> epsilon_grid(const PathFrequencyTable& table);

// Mean of stopping_epsilon over epsilon_grid; 0 for an empty table.
double mean_stopping_epsilon(const PathFrequencyTable& table);

struct AdaptiveResult {
  std::int64_t num_trees = 0;
  PathFrequencyTable table;
  double epsilon = 0.0;
  bool hit_cap = false;
};

// Grows batches of trees until mean_stopping_epsilon < alpha or the cap is reached.
AdaptiveResult adaptive_num_trees(const Dataset& data, const QuantileGrid& grid, const ForestParams& params);

struct ParetoPoint {
  double p0 = 0.0;
  double size = 0.0;
  double error = 0.0;
  double stability = 0.0;
  double distance = 0.0;
};

// Distance to the ideal point of zero error and 0.9 stability.
double pareto_distance(double error, double stability);

// Index of the closest point; ties go to the smaller size, then the larger p0.
std::size_t pareto_argmin(std::span<const ParetoPoint> points);

struct TuningResult {
  double p0 = 0.0;
  std::vector<double> repeat_p0;
  std::vector<ParetoPoint> pareto;  // averaged over repeats, by decreasing p0
  std::vector<std::vector<ParetoPoint>> repeat_points;
  EvaluationReport evaluation;      // at the selected p0
  std::int64_t forests_grown = 0;
  std::int64_t full_data_trees = 0;
};

// Chooses p0 per repeat by the Pareto distance and returns the median.
// One forest is grown per fold and reused for every candidate p0.
TuningResult tune_p0(const Dataset& data, const ForestParams& params, int k, int repeats);

void write_pareto_csv(std::ostream& out, std::span<const ParetoPoint> points);

}  // namespace sirus
