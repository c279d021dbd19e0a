#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "sirus/data.hpp"
#include "sirus/forest.hpp"
#include "sirus/rules.hpp"

namespace sirus {

// 2|a & b| / (|a| + |b|) over sets of canonical paths. Two empty sets give 1.
double dice_sorensen(std::span<const Path> a, std::span<const Path> b);

// Mean squared error divided by the population variance of truth.
double unexplained_variance(std::span<const double> predictions, std::span<const double> truth);

struct StabilityReport {
  double mean_dice = 1.0;
  std::vector<double> pairwise;  // (0,1), (0,2), ..., (k-2,k-1)
  std::vector<std::vector<Path>> rule_sets;
};

StabilityReport stability_report(std::vector<std::vector<Path>> rule_sets);

struct EvaluationReport {
  std::string dataset;
  double p0 = 0.0;
  int folds = 10;
  int repeats = 1;
  std::uint64_t seed = 0;
  double error = 0.0;        // pooled over folds, averaged over repeats
  double error_macro = 0.0;  // mean of per-fold errors
  double model_size = 0.0;   // rules after zero-weight discard
  double model_size_before_discard = 0.0;
  double stability = 0.0;
  double mean_trees = 0.0;
  double runtime_seconds = 0.0;
  std::vector<double> repeat_errors;
  std::vector<double> repeat_stability;
};

// k-fold evaluation of SIRUS at a fixed p0, averaged over repeats.
EvaluationReport cv_evaluate(const Dataset& data, double p0, const ForestParams& params, int k, int repeats);

std::string to_json(const EvaluationReport& report);
std::string csv_header();
std::string to_csv_row(const EvaluationReport& report);

}  // namespace sirus
