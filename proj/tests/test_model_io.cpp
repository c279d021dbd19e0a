#include <cstdio>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "sirus/error.hpp"
#include "sirus/model_io.hpp"
#include "sirus/pipeline.hpp"

using namespace sirus;

namespace {

SirusModel small_model() {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> z;
  const std::size_t n = 200;
  std::vector<double> cols(3 * n), y(n);
  for (auto& v : cols) v = z(rng) / 3.0;
  for (std::size_t i = 0; i < n; ++i) y[i] = (cols[i] < 0 ? 1.0 : 2.0) + (cols[n + i] > 0.2 ? 0.7 : 0.0) + 0.3 * z(rng);
  Dataset d({"alpha", "beta", "gamma"}, cols, y, "target");
  ForestParams p;
  p.num_trees = 400;
  return fit_sirus(d, p, 0.05);
}

void check_same(const SirusModel& a, const SirusModel& b) {
  CHECK(a.schema.feature_names == b.schema.feature_names);
  CHECK(a.response_name == b.response_name);
  CHECK(a.response_mean == b.response_mean);
  CHECK(a.grid == b.grid);
  CHECK(a.p0 == b.p0);
  CHECK(a.lambda == b.lambda);
  CHECK(a.intercept == b.intercept);
  CHECK(a.weights == b.weights);
  CHECK(a.frequencies == b.frequencies);
  CHECK(a.num_trees == b.num_trees);
  CHECK(a.rules_before_discard == b.rules_before_discard);
  REQUIRE(a.rules.size() == b.rules.size());
  for (std::size_t k = 0; k < a.rules.size(); ++k) {
    CHECK(a.rules[k].path == b.rules[k].path);
    CHECK(a.rules[k].y_in == b.rules[k].y_in);
    CHECK(a.rules[k].y_out == b.rules[k].y_out);
    CHECK(a.rules[k].n_in == b.rules[k].n_in);
    REQUIRE(a.rules[k].conditions.size() == b.rules[k].conditions.size());
    for (std::size_t c = 0; c < a.rules[k].conditions.size(); ++c) CHECK(a.rules[k].conditions[c].cut == b.rules[k].conditions[c].cut);
  }
}

}  // namespace

TEST_CASE("json round trip is exact") {
  auto m = small_model();
  REQUIRE(m.size() > 0);
  auto back = model_from_json(model_to_json(m));
  check_same(m, back);
  CHECK(model_to_json(back) == model_to_json(m));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z;
  for (int t = 0; t < 50; ++t) {
    std::vector<double> x{z(rng), z(rng), z(rng)};
    CHECK(predict(m, x) == predict(back, x));
  }
}

TEST_CASE("file round trip") {
  auto m = small_model();
  const auto path = (std::filesystem::temp_directory_path() / "sirus_model_io_test.json").string();
  save_model(m, path);
  check_same(m, load_model(path));
  std::remove(path.c_str());
}

TEST_CASE("categorical schema survives") {
  auto m = small_model();
  m.schema.categoricals.push_back({"colour", {"blue", "red"}});
  auto back = model_from_json(model_to_json(m));
  REQUIRE(back.schema.categoricals.size() == 1);
  CHECK(back.schema.categoricals[0].name == "colour");
  CHECK(back.schema.categoricals[0].levels == std::vector<std::string>{"blue", "red"});
}

TEST_CASE("malformed documents are data errors") {
  for (const char* text : {"", "{", "[]", "{\"q\": 10}", "{\"q\": \"ten\", \"rules\": []}"}) {
    try {
      model_from_json(text);
      FAIL("accepted " << text);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Data);
    }
  }
  try {
    load_model("/nonexistent/dir/model.json");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
}
