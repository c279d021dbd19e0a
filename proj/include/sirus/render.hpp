#pragma once

#include <string>
#include <vector>

#include "sirus/aggregation.hpp"

namespace sirus {

enum class TableFormat { Text, Markdown };

// x rounded to `digits` significant digits, without exponent notation for
// ordinary magnitudes.
std::string format_significant(double x, int digits);

// Shortest decimal string that parses back to exactly x.
std::string format_exact(double x);

// Rule list in the layout
//   Average <response> = <mean>
//   Intercept = <intercept>
//   Frequency | Rule | Weight
// with one row per rule, most frequent first.
std::string render_rules(const SirusModel& model, TableFormat format);

struct RenderedCondition {
  std::string feature;
  Side side;
  double cut;
};

struct RenderedRule {
  double frequency;
  std::vector<RenderedCondition> conditions;
  double y_in;
  double y_out;
  double weight;
};

struct RenderedTable {
  std::string response;
  double average;
  double intercept;
  std::vector<RenderedRule> rules;
};

RenderedTable parse_rule_table(const std::string& text);

// Maps parsed conditions back to canonical paths through the feature names
// and the cut values of the grid.
std::vector<Path> paths_from_table(const RenderedTable& table, const FeatureSchema& schema, const QuantileGrid& grid);

}  // namespace sirus
