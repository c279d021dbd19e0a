#include <random>

#include "doctest.h"
#include "sirus/error.hpp"
#include "sirus/pipeline.hpp"
#include "sirus/render.hpp"

using namespace sirus;

namespace {

Dataset toy(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  const std::size_t n = 250;
  std::vector<double> cols(3 * n), y(n);
  for (auto& v : cols) v = 10 + 4 * z(rng);
  for (std::size_t i = 0; i < n; ++i)
    y[i] = (cols[i] < 10 ? 5.0 : 9.0) + (cols[n + i] > 11 ? 2.0 : 0.0) + (cols[2 * n + i] < 8 && cols[i] > 9 ? 3.0 : 0.0) + z(rng);
  return Dataset({"temp", "vis", "ibh"}, cols, y, "Ozone");
}

}  // namespace

TEST_CASE("significant digits") {
  CHECK(format_significant(0.1234, 2) == "0.12");
  CHECK(format_significant(23.2, 3) == "23.2");
  CHECK(format_significant(-7.84, 2) == "-7.8");
  CHECK(format_significant(2110, 3) == "2110");
  CHECK(format_significant(0.072, 2) == "0.072");
  CHECK(format_significant(0, 3) == "0");
  CHECK(format_exact(0.1) == "0.1");
  CHECK(std::stod(format_exact(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("rendered table layout") {
  ForestParams p;
  p.num_trees = 500;
  auto m = fit_sirus(toy(1), p, 0.05);
  REQUIRE(m.size() > 0);
  const auto text = render_rules(m, TableFormat::Text);
  CHECK(text.rfind("Average Ozone = ", 0) == 0);
  CHECK(text.find("\nIntercept = ") != std::string::npos);
  CHECK(text.find("Frequency | Rule | Weight") != std::string::npos);
  CHECK(text.find(" then Ozone = ") != std::string::npos);
  CHECK(text.find(" else Ozone = ") != std::string::npos);
  const auto md = render_rules(m, TableFormat::Markdown);
  CHECK(md.find("|---|---|---|") != std::string::npos);
}

TEST_CASE("parsing a rendered table recovers the rule set") {
  for (std::uint64_t seed : {1, 2, 3}) {
    ForestParams p;
    p.num_trees = 500;
    p.seed = seed;
    auto d = toy(seed);
    auto m = fit_sirus(d, p, 0.04);
    for (auto fmt : {TableFormat::Text, TableFormat::Markdown}) {
      auto table = parse_rule_table(render_rules(m, fmt));
      CHECK(table.response == "Ozone");
      REQUIRE(table.rules.size() == m.size());
      auto paths = paths_from_table(table, m.schema, m.grid);
      auto expect = m.paths();
      std::sort(paths.begin(), paths.end());
      std::sort(expect.begin(), expect.end());
      CHECK(paths == expect);
      for (const auto& r : table.rules) {
        CHECK(r.frequency > 0);
        CHECK(r.frequency <= 1);
        CHECK(r.weight > 0);
      }
    }
  }
}

TEST_CASE("hand-written table parses") {
  const std::string text =
      "Average Ozone = 12\n"
      "Intercept = -7.8\n"
      "Frequency | Rule | Weight\n"
      "0.29 | if temp < 65 then Ozone = 7 else Ozone = 19 | 0.12\n"
      "0.05 | if temp ≥ 65 & vis < 150 then Ozone = 20 else Ozone = 7 | 0.31\n";
  auto t = parse_rule_table(text);
  CHECK(t.average == 12);
  CHECK(t.intercept == doctest::Approx(-7.8));
  REQUIRE(t.rules.size() == 2);
  CHECK(t.rules[1].conditions.size() == 2);
  CHECK(t.rules[1].conditions[0].side == Side::Right);
  CHECK(t.rules[1].conditions[1].feature == "vis");
  CHECK(t.rules[1].y_in == 20);
  CHECK_THROWS_AS(parse_rule_table("nonsense"), Error);
}
