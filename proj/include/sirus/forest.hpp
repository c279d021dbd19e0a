#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "sirus/data.hpp"
#include "sirus/rules.hpp"

namespace sirus {

enum class Sampling { Bootstrap, Subsample };

// Batch growth settings used when the tree count is chosen adaptively.
struct AdaptiveSettings {
  double alpha = 0.05;
  int batch_size = 100;
  std::int64_t max_trees = 100000;
};

struct ForestParams {
  std::optional<std::int64_t> num_trees;  // empty: adaptive
  int max_depth = 2;
  std::optional<int> mtry;  // empty: max(floor(p/3), 2), capped at p
  int q = 10;
  Sampling sampling = Sampling::Bootstrap;
  double subsample_rate = 0.632;
  int min_node_size = 1;
  std::uint64_t seed = 20200101;
  AdaptiveSettings adaptive;

  int resolved_mtry(std::size_t p) const;
  void validate(std::size_t p) const;
};

using TreePaths = std::vector<Path>;

// Var(node) - nL/n Var(L) - nR/n Var(R), population variances.
double cart_variance_reduction(std::span<const double> responses, const std::vector<bool>& left_mask);

// Bin index of every sample against the grid, shared by all trees of a forest.
class BinnedData {
 public:
  BinnedData(const Dataset& data, const QuantileGrid& grid);

  std::size_t n() const { return n_; }
  std::size_t p() const { return p_; }
  std::uint32_t bin(std::size_t i, std::size_t j) const { return bins_[j * n_ + i]; }
  std::size_t num_cuts(std::size_t j) const { return grid_->cuts[j].size(); }
  int rank(std::size_t j, std::size_t cut_index) const { return grid_->cuts[j][cut_index].rank; }
  double cut(std::size_t j, std::size_t cut_index) const { return grid_->cuts[j][cut_index].value; }
  double y(std::size_t i) const { return y_[i]; }
  const QuantileGrid& grid() const { return *grid_; }

 private:
  std::size_t n_, p_;
  std::vector<std::uint32_t> bins_;
  std::vector<double> y_;
  const QuantileGrid* grid_;
};

// Best quantile split of a node. A cut index t sends bins <= t left.
struct SplitChoice {
  std::size_t feature;
  std::size_t cut_index;
  double reduction;
};

// Scans the given features in the order given, keeping the first cut with
// the largest reduction. Features must be sorted ascending for the
// (feature, rank) tie-break.
std::optional<SplitChoice> find_best_split(const BinnedData& data, std::span<const std::uint32_t> samples,
                                           std::span<const std::size_t> features);

// Draws the tree's sample (bootstrap or subsample) from `rng`.
std::vector<std::uint32_t> draw_tree_sample(std::size_t n, const ForestParams& params, std::mt19937_64& rng);

// Grows one shallow tree and returns the canonical paths of all its non-root nodes.
TreePaths grow_tree(const BinnedData& data, const ForestParams& params, std::mt19937_64& rng);
TreePaths grow_tree(const Dataset& data, const QuantileGrid& grid, const ForestParams& params,
                    std::mt19937_64& rng);

// Grows trees [first, first + count) into `table`. Tree t uses an RNG stream
// derived from (seed, t), so any split of the index range gives the same counts.
void grow_trees(const BinnedData& data, const ForestParams& params, std::int64_t first, std::int64_t count,
                PathFrequencyTable& table);

// Fixed tree count, or the adaptive stopping rule when params.num_trees is empty.
PathFrequencyTable grow_forest(const Dataset& data, const QuantileGrid& grid, const ForestParams& params);

// Unrestricted-depth forest over quantile cuts, used as an accuracy baseline.
class QuantileForest {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double cut = 0.0;
    std::uint32_t left = 0, right = 0;
    double value = 0.0;
  };

  // params.max_depth <= 0 means unlimited depth; num_trees defaults to 500.
  static QuantileForest fit(const Dataset& data, const QuantileGrid& grid, const ForestParams& params);

  double predict(std::span<const double> x) const;
  std::vector<double> predict(const Dataset& data) const;
  std::size_t num_trees() const { return trees_.size(); }

 private:
  std::vector<std::vector<Node>> trees_;
};

// Baseline forest error: pooled k-fold unexplained variance, averaged over repeats.
double quantile_forest_cv_error(const Dataset& data, const ForestParams& params, int k, int repeats);

}  // namespace sirus
