#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "sirus/aggregation.hpp"
#include "sirus/error.hpp"
#include "sirus/pipeline.hpp"

using namespace sirus;

namespace {

RuleDesignMatrix design_from(const std::vector<std::vector<double>>& g, const std::vector<double>& y) {
  RuleDesignMatrix d;
  d.gamma.resize(static_cast<Eigen::Index>(g.size()), static_cast<Eigen::Index>(g.empty() ? 0 : g[0].size()));
  d.y.resize(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < g.size(); ++i) {
    d.y(static_cast<Eigen::Index>(i)) = y[i];
    for (std::size_t k = 0; k < g[i].size(); ++k) d.gamma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = g[i][k];
  }
  return d;
}

// Gradient of the objective with respect to beta (intercept at its optimum).
Eigen::VectorXd gradient(const RuleDesignMatrix& d, const RidgeFit& f, double lambda) {
  Eigen::VectorXd r = d.y - d.gamma * f.weights;
  r.array() -= f.intercept;
  return -2.0 / static_cast<double>(d.y.size()) * d.gamma.transpose() * r + 2 * lambda * f.weights;
}

struct Instance {
  std::vector<std::vector<double>> g;
  std::vector<double> y;
  double lambda;
};

Instance random_instance(std::mt19937_64& rng, bool two_valued) {
  std::uniform_int_distribution<int> nd(5, 50), cd(1, 10);
  std::normal_distribution<double> z;
  const int n = nd(rng), c = cd(rng);
  Instance in;
  in.g.assign(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(c)));
  std::vector<double> lo(c), hi(c);
  for (int k = 0; k < c; ++k) lo[k] = z(rng), hi[k] = z(rng);
  for (auto& row : in.g)
    for (int k = 0; k < c; ++k) row[k] = two_valued ? (rng() % 2 ? hi[k] : lo[k]) : z(rng);
  in.y.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    in.y[i] = z(rng);
    for (int k = 0; k < c; ++k) in.y[i] += 0.5 * z(rng) * in.g[i][k] * (k % 2 ? 1 : -1);
  }
  in.lambda = std::pow(10.0, -2 + 2.5 * std::uniform_real_distribution<double>()(rng));
  return in;
}

}  // namespace

TEST_CASE("one centred predictor has the analytic solution") {
  auto d = design_from({{1}, {-1}}, {1, -1});
  auto f = fit_nn_ridge(d, 0.5);
  CHECK(f.weights(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(std::fabs(f.intercept) < 1e-15);
}

TEST_CASE("a predictor anti-correlated with y gets weight zero") {
  auto d = design_from({{1}, {-1}, {2}}, {-1, 1, -3});
  auto f = fit_nn_ridge(d, 0.1);
  CHECK(f.weights(0) == 0.0);
  CHECK(f.intercept == doctest::Approx(-1.0));
}

TEST_CASE("solver matches the projected-gradient oracle and satisfies KKT") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    auto in = random_instance(rng, trial % 2 == 1);
    auto d = design_from(in.g, in.y);
    auto f = fit_nn_ridge(d, in.lambda);
    auto o = oracle::nn_ridge_projected_gradient(in.g, in.y, in.lambda);
    for (std::size_t k = 0; k < o.beta.size(); ++k)
      CHECK(std::fabs(f.weights(static_cast<Eigen::Index>(k)) - o.beta[k]) <= 1e-8);
    CHECK(std::fabs(f.intercept - o.intercept) <= 1e-7);
    auto grad = gradient(d, f, in.lambda);
    for (Eigen::Index k = 0; k < grad.size(); ++k) {
      CHECK(f.weights(k) >= 0);
      if (f.weights(k) > 0)
        CHECK(std::fabs(grad(k)) <= 1e-8);
      else
        CHECK(grad(k) >= -1e-8);
    }
    const double var_y = (d.y.array() - d.y.mean()).square().mean();
    CHECK(nn_ridge_objective(d, f, in.lambda) <= var_y + 1e-12);
  }
}

TEST_CASE("warm starts do not change the solution") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    auto in = random_instance(rng, false);
    auto d = design_from(in.g, in.y);
    const auto n = static_cast<double>(in.y.size());
    Eigen::RowVectorXd mean = d.gamma.colwise().mean();
    Eigen::MatrixXd gc = d.gamma.rowwise() - mean;
    Eigen::VectorXd yc = d.y.array() - d.y.mean();
    Eigen::MatrixXd q = gc.transpose() * gc / n;
    q.diagonal().array() += in.lambda;
    Eigen::VectorXd c = gc.transpose() * yc / n;
    Eigen::VectorXd cold = solve_nnls_quadratic(q, c);
    Eigen::VectorXd warm_seed = Eigen::VectorXd::Random(c.size()).cwiseAbs();
    Eigen::VectorXd warm = solve_nnls_quadratic(q, c, &warm_seed);
    CHECK((cold - warm).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("squared weight norm does not grow with lambda") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    auto in = random_instance(rng, true);
    auto d = design_from(in.g, in.y);
    double last = INFINITY;
    for (double lambda : default_lambda_grid(1.0)) {
      const double norm = fit_nn_ridge(d, lambda).weights.squaredNorm();
      CHECK(norm <= last * (1 + 1e-9) + 1e-15);
      last = norm;
    }
  }
}

TEST_CASE("else-clause form gives the same weights up to the intercept") {
  std::mt19937_64 rng(14);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 40, c = 5;
    std::vector<std::vector<double>> g(n, std::vector<double>(c)), h = g;
    std::vector<double> yin(c), yout(c), y(n);
    for (int k = 0; k < c; ++k) yin[k] = z(rng), yout[k] = z(rng);
    for (int i = 0; i < n; ++i) {
      y[i] = z(rng);
      for (int k = 0; k < c; ++k) {
        const bool in = rng() % 3 == 0;
        g[i][k] = in ? yin[k] : yout[k];
        h[i][k] = in ? yin[k] - yout[k] : 0.0;
        y[i] += in ? 0.7 * (yin[k] - yout[k]) : 0.0;
      }
    }
    auto dg = design_from(g, y), dh = design_from(h, y);
    auto fg = fit_nn_ridge(dg, 0.05), fh = fit_nn_ridge(dh, 0.05);
    CHECK((fg.weights - fh.weights).cwiseAbs().maxCoeff() <= 1e-8);
    Eigen::VectorXd pg = (dg.gamma * fg.weights).array() + fg.intercept;
    Eigen::VectorXd ph = (dh.gamma * fh.weights).array() + fh.intercept;
    CHECK((pg - ph).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("non-finite design is rejected") {
  auto d = design_from({{1}, {NAN}}, {1, 2});
  CHECK_THROWS_AS(fit_nn_ridge(d, 1.0), Error);
}

TEST_CASE("lambda grid spans 1e-4 to 1e2 times the variance") {
  auto g = default_lambda_grid(3.0);
  REQUIRE(g.size() == 50);
  CHECK(g.front() == doctest::Approx(3e-4));
  CHECK(g.back() == doctest::Approx(300.0));
  CHECK(std::is_sorted(g.begin(), g.end()));
}

namespace {

struct RuleProblem {
  Dataset data;
  std::vector<Rule> rules;
};

RuleProblem rule_problem(std::uint64_t seed, bool signal, std::size_t n = 400) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  const std::size_t p = 4;
  std::vector<double> cols(n * p), y(n);
  for (auto& v : cols) v = static_cast<double>(rng() % 4);
  for (std::size_t i = 0; i < n; ++i)
    y[i] = signal ? (cols[i] < 2 ? -1.0 : 1.0) + (cols[n + i] < 1 ? 0.0 : 2.0) + 0.01 * z(rng) : z(rng);
  Dataset d({"a", "b", "c", "e"}, cols, y);
  auto g = compute_quantile_grid(d, 10);
  ForestParams params;
  params.num_trees = 500;
  auto table = grow_forest(d, g, params);
  auto cand = build_candidates(table, g, d, 0.0, 8);
  return {d, cand.rules};
}

// Held-out MSE of each lambda, refitting from scratch on every fold.
std::vector<double> brute_force_cv(const RuleProblem& pr, const FoldAssignment& folds, const std::vector<double>& grid) {
  std::vector<double> mse(grid.size(), 0.0);
  for (int f = 0; f < folds.k; ++f) {
    auto train = pr.data.subset(folds.train_indices(f));
    auto test = pr.data.subset(folds.test_indices(f));
    std::vector<Rule> rules = pr.rules;
    for (auto& r : rules) {
      double in = 0, out = 0;
      std::size_t n_in = 0, n_out = 0;
      for (std::size_t i = 0; i < train.n(); ++i) {
        if (r.contains(train.row(i)))
          in += train.response()[i], ++n_in;
        else
          out += train.response()[i], ++n_out;
      }
      if (n_in > 0 && n_out > 0) r.y_in = in / n_in, r.y_out = out / n_out;
    }
    auto design = build_design(rules, train);
    for (std::size_t l = 0; l < grid.size(); ++l) {
      auto fit = fit_nn_ridge(design, grid[l]);
      for (std::size_t i = 0; i < test.n(); ++i) {
        double pred = fit.intercept;
        for (std::size_t r = 0; r < rules.size(); ++r) pred += fit.weights(static_cast<Eigen::Index>(r)) * rule_eval(rules[r], test.row(i));
        mse[l] += (pred - test.response()[i]) * (pred - test.response()[i]) / static_cast<double>(pr.data.n());
      }
    }
  }
  return mse;
}

}  // namespace

TEST_CASE("lambda tuning agrees with refitting every fold from scratch") {
  for (std::uint64_t seed : {1, 2, 3, 4}) {
    auto pr = rule_problem(seed, seed % 2 == 0, 120);
    REQUIRE(!pr.rules.empty());
    auto folds = kfold_split(pr.data.n(), 5, seed);
    auto grid = default_lambda_grid(1.0);
    auto mse = brute_force_cv(pr, folds, grid);
    const double chosen = tune_lambda(pr.rules, pr.data, folds, grid);
    const auto at = static_cast<std::size_t>(std::find(grid.begin(), grid.end(), chosen) - grid.begin());
    REQUIRE(at < grid.size());
    const double best = *std::min_element(mse.begin(), mse.end());
    CHECK(mse[at] <= best * (1 + 1e-9) + 1e-12);
    auto curve = lambda_cv_curve(pr.rules, pr.data, folds, grid);
    for (std::size_t l = 0; l < grid.size(); ++l) CHECK(curve[l] == doctest::Approx(mse[l]).epsilon(1e-9));
  }
}

TEST_CASE("lambda tuning on a rule-explained response picks little shrinkage") {
  auto pr = rule_problem(4, true);
  auto grid = default_lambda_grid(1.0);
  const double chosen = tune_lambda(pr.rules, pr.data, kfold_split(pr.data.n(), 10, 4), grid);
  CHECK(chosen <= grid[10]);
}

TEST_CASE("lambda tuning on noise prefers the heaviest shrinkage to none") {
  for (std::uint64_t seed : {1, 2, 3}) {
    auto pr = rule_problem(seed, false, 60);
    auto folds = kfold_split(pr.data.n(), 10, seed);
    auto grid = default_lambda_grid(1.0);
    auto mse = brute_force_cv(pr, folds, grid);
    CHECK(mse.back() <= mse.front());
  }
}

TEST_CASE("single-value lambda grid is returned as is") {
  auto pr = rule_problem(5, true);
  std::vector<double> grid{0.37};
  CHECK(tune_lambda(pr.rules, pr.data, kfold_split(pr.data.n(), 10, 5), grid) == 0.37);
}

TEST_CASE("prediction is intercept plus weighted rule outputs") {
  SirusModel m;
  m.schema.feature_names = {"a"};
  m.intercept = 1.5;
  CHECK(predict(m, std::vector<double>{3.0}) == 1.5);
  Rule r;
  r.path = canonicalize_path({{0, 1, Side::Left}});
  r.conditions = {{0, 1, Side::Left, 2.0}};
  r.y_in = 10;
  r.y_out = 20;
  m.rules = {r};
  m.weights = {0.5};
  m.frequencies = {0.3};
  CHECK(predict(m, std::vector<double>{1.0}) == 6.5);
  CHECK(predict(m, std::vector<double>{2.0}) == 11.5);
  m.weights = {0.0};
  CHECK(predict(m, std::vector<double>{1.0}) == 1.5);
  CHECK_THROWS_AS(predict(m, std::vector<double>{1.0, 2.0}), Error);
}

TEST_CASE("ozone rule list evaluated by hand") {
  SirusModel m;
  m.schema.feature_names = {"temp", "ibt", "vis", "vh", "ibh"};
  m.intercept = -7.8;
  auto add = [&](std::vector<RuleCondition> conds, double yin, double yout, double w) {
    Rule r;
    std::vector<Constraint> raw;
    for (auto& c : conds) raw.push_back({c.feature, c.rank, c.side});
    r.path = canonicalize_path(raw);
    r.conditions = conds;
    r.y_in = yin;
    r.y_out = yout;
    m.rules.push_back(r);
    m.weights.push_back(w);
    m.frequencies.push_back(0.1);
  };
  const Side L = Side::Left, R = Side::Right;
  add({{0, 1, L, 65}}, 7, 19, 0.12);
  add({{1, 2, L, 189}}, 7, 18, 0.07);
  add({{0, 1, R, 65}, {2, 1, L, 150}}, 20, 7, 0.31);
  add({{3, 1, L, 5840}}, 10, 20, 0.072);
  add({{4, 1, L, 2110}}, 16, 7, 0.14);
  add({{4, 2, L, 2960}}, 15, 6, 0.10);
  add({{0, 1, R, 65}, {4, 1, L, 2110}}, 21, 8, 0.16);
  add({{2, 1, L, 150}}, 14, 7, 0.18);
  add({{0, 1, L, 65}, {1, 1, L, 120}}, 5, 15, 0.15);
  add({{0, 2, L, 70}}, 8, 20, 0.14);
  add({{1, 3, L, 227}}, 9, 22, 0.21);
  const std::vector<double> x{60, 100, 200, 5000, 3000};
  const double expect = -7.8 + 0.12 * 7 + 0.07 * 7 + 0.31 * 7 + 0.072 * 10 + 0.14 * 7 + 0.10 * 6 + 0.16 * 8 +
                        0.18 * 7 + 0.15 * 5 + 0.14 * 8 + 0.21 * 9;
  CHECK(predict(m, x) == doctest::Approx(expect).epsilon(1e-14));
  CHECK(m.rules[0].contains(std::vector<double>{60, 0, 0, 0, 0}));
  CHECK(rule_eval(m.rules[0], std::vector<double>{60, 0, 0, 0, 0}) == 7);
  CHECK(rule_eval(m.rules[0], std::vector<double>{65, 0, 0, 0, 0}) == 19);
}
