#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sirus/data.hpp"

namespace sirus {

enum class Side : std::uint8_t { Left = 0, Right = 1 };  // Left: x < cut, Right: x >= cut

struct Constraint {
  int feature = 0;
  int rank = 0;
  Side side = Side::Left;

  auto operator<=>(const Constraint&) const = default;
};

// Symbolic identity of a tree node, and hence of a rule. Constraints are kept
// in canonical (feature, rank, side) order; see canonicalize_path.
struct Path {
  std::vector<Constraint> constraints;

  std::size_t size() const { return constraints.size(); }
  auto operator<=>(const Path&) const = default;
};

std::string to_string(const Path& path);

// Sorts constraints and removes identical triplets. A pair (j, r, L) and
// (j, r, R) describes an empty region and is rejected.
Path canonicalize_path(std::vector<Constraint> raw);

// Occurrence counts of canonical paths over a forest of num_trees trees.
class PathFrequencyTable {
 public:
  PathFrequencyTable() = default;
  explicit PathFrequencyTable(std::int64_t num_trees) : num_trees_(num_trees) {}

  // Counts one tree; each distinct path of the tree is counted once.
  void add_tree(std::span<const Path> tree_paths);
  void add_count(const Path& path, std::int64_t count) { counts_[path] += count; }
  void set_num_trees(std::int64_t m) { num_trees_ = m; }
  void merge(const PathFrequencyTable& other);

  std::int64_t num_trees() const { return num_trees_; }
  std::int64_t count(const Path& path) const;
  double frequency(const Path& path) const;
  const std::map<Path, std::int64_t>& counts() const { return counts_; }
  bool empty() const { return counts_.empty(); }
  std::size_t size() const { return counts_.size(); }

  // All paths by decreasing count, ties in canonical path order.
  std::vector<std::pair<Path, std::int64_t>> sorted() const;

  bool operator==(const PathFrequencyTable&) const = default;

 private:
  std::map<Path, std::int64_t> counts_;
  std::int64_t num_trees_ = 0;
};

// Paths with frequency strictly above p0, by decreasing frequency.
std::vector<Path> select_paths(const PathFrequencyTable& table, double p0);

// Incremental linear-independence test for rule functions. A path is
// accepted when its indicator function is not a linear combination of the
// constant function and the indicators of previously accepted paths.
// Arithmetic is exact.
class IndependenceFilter {
 public:
  IndependenceFilter();
  ~IndependenceFilter();
  IndependenceFilter(IndependenceFilter&&) noexcept;
  IndependenceFilter& operator=(IndependenceFilter&&) noexcept;

  // Returns true and records the path if it is independent.
  bool try_add(const Path& path);
  std::size_t accepted() const { return accepted_; }

 private:
  struct State;
  std::unique_ptr<State> state_;
  std::size_t accepted_ = 0;
};

// Removes every path whose rule is a linear combination of rules from
// earlier (more frequent) kept paths. Input order is preserved.
std::vector<Path> post_treat(std::span<const Path> selected, const QuantileGrid& grid);

struct RuleCondition {
  int feature;
  int rank;
  Side side;
  double cut;

  bool holds(double value) const { return side == Side::Left ? value < cut : value >= cut; }
};

struct Interval {
  double lower;  // inclusive
  double upper;  // exclusive
};

// If x falls in the path's hyperrectangle, the rule predicts y_in, else y_out.
struct Rule {
  Path path;
  std::vector<RuleCondition> conditions;
  double y_in = 0.0;
  double y_out = 0.0;
  std::size_t n_in = 0;
  std::size_t n_out = 0;

  bool contains(std::span<const double> x) const;
  // Per-feature bounds of the hyperrectangle over p features.
  std::vector<Interval> hyperrectangle(std::size_t p) const;
};

std::vector<RuleCondition> conditions_from_path(const Path& path, const QuantileGrid& grid);

// Estimates the two rule outputs on `data`. Throws DegenerateRule if either
// side of the hyperrectangle holds no training point.
Rule rule_from_path(const Path& path, const QuantileGrid& grid, const Dataset& data);

double rule_eval(const Rule& rule, std::span<const double> x);

}  // namespace sirus
