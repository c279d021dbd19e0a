#include "sirus/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sirus/error.hpp"

namespace sirus {

RuleDesignMatrix build_design(std::span<const Rule> rules, const Dataset& data) {
  RuleDesignMatrix d;
  d.gamma.resize(static_cast<Eigen::Index>(data.n()), static_cast<Eigen::Index>(rules.size()));
  d.y.resize(static_cast<Eigen::Index>(data.n()));
  std::vector<double> x(data.p());
  for (std::size_t i = 0; i < data.n(); ++i) {
    for (std::size_t j = 0; j < data.p(); ++j) x[j] = data.x(i, j);
    for (std::size_t k = 0; k < rules.size(); ++k)
      d.gamma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rule_eval(rules[k], x);
    d.y(static_cast<Eigen::Index>(i)) = data.response()[i];
  }
  return d;
}

Eigen::VectorXd solve_nnls_quadratic(const Eigen::MatrixXd& q, const Eigen::VectorXd& c,
                                     const Eigen::VectorXd* warm_start) {
  const Eigen::Index n = c.size();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  if (n == 0) return x;
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  const double scale = std::max({c.cwiseAbs().maxCoeff(), q.diagonal().cwiseAbs().maxCoeff(), 1e-300});
  const double tol = 1e-13 * scale;

  auto solve_passive = [&](Eigen::VectorXd& s) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < n; ++j)
      if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
    s = Eigen::VectorXd::Zero(n);
    if (idx.empty()) return;
    const auto m = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd qp(m, m);
    Eigen::VectorXd cp(m);
    for (Eigen::Index a = 0; a < m; ++a) {
      cp(a) = c(idx[static_cast<std::size_t>(a)]);
      for (Eigen::Index b = 0; b < m; ++b) qp(a, b) = q(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
    }
    Eigen::VectorXd sp = qp.ldlt().solve(cp);
    for (Eigen::Index a = 0; a < m; ++a) s(idx[static_cast<std::size_t>(a)]) = sp(a);
  };

  // Moves x toward the unconstrained optimum on the passive set, dropping
  // variables that hit zero, until that optimum is feasible.
  const int max_inner = 4 * static_cast<int>(n) + 20;
  auto inner = [&] {
    Eigen::VectorXd s;
    for (int it = 0; it < max_inner; ++it) {
      solve_passive(s);
      bool feasible = true;
      double alpha = 1.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!passive[static_cast<std::size_t>(j)] || s(j) > 0) continue;
        feasible = false;
        const double denom = x(j) - s(j);
        alpha = std::min(alpha, denom > 0 ? x(j) / denom : 0.0);
      }
      if (feasible) {
        x = s;
        return;
      }
      x += alpha * (s - x);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && (x(j) <= 0 || (s(j) <= 0 && x(j) <= tol * 1e-3))) {
          passive[static_cast<std::size_t>(j)] = false;
          x(j) = 0;
        }
      }
    }
  };

  if (warm_start && warm_start->size() == n) {
    for (Eigen::Index j = 0; j < n; ++j)
      if ((*warm_start)(j) > 0) {
        passive[static_cast<std::size_t>(j)] = true;
        x(j) = (*warm_start)(j);
      }
    inner();
  }

  const int max_outer = 3 * static_cast<int>(n) + 30;
  for (int it = 0; it < max_outer; ++it) {
    Eigen::VectorXd w = c - q * x;
    Eigen::Index best = -1;
    double best_w = tol;
    for (Eigen::Index j = 0; j < n; ++j)
      if (!passive[static_cast<std::size_t>(j)] && w(j) > best_w) {
        best_w = w(j);
        best = j;
      }
    if (best < 0) break;
    passive[static_cast<std::size_t>(best)] = true;
    inner();
    if (!passive[static_cast<std::size_t>(best)]) break;  // numerically stuck
  }
  return x;
}

RidgeFit fit_nn_ridge(const RuleDesignMatrix& design, double lambda) {
  const auto n = design.gamma.rows();
  const auto c = design.gamma.cols();
  if (design.y.size() != n || n == 0) throw Error(ErrorKind::Data, "design matrix and response disagree");
  if (!design.gamma.allFinite() || !design.y.allFinite())
    throw Error(ErrorKind::Data, "non-finite entry in rule design matrix or response");
  if (!(lambda >= 0) || !std::isfinite(lambda)) throw Error(ErrorKind::Config, "lambda must be finite and >= 0");

  const double nd = static_cast<double>(n);
  const double y_mean = design.y.mean();
  RidgeFit fit;
  if (c == 0) {
    fit.weights = Eigen::VectorXd(0);
    fit.intercept = y_mean;
    return fit;
  }
  Eigen::RowVectorXd col_mean = design.gamma.colwise().mean();
  Eigen::MatrixXd centered = design.gamma.rowwise() - col_mean;
  Eigen::VectorXd yc = design.y.array() - y_mean;
  Eigen::MatrixXd q = centered.transpose() * centered / nd;
  q.diagonal().array() += lambda;
  Eigen::VectorXd rhs = centered.transpose() * yc / nd;
  fit.weights = solve_nnls_quadratic(q, rhs);
  fit.intercept = y_mean - col_mean.dot(fit.weights);
  return fit;
}

double nn_ridge_objective(const RuleDesignMatrix& design, const RidgeFit& fit, double lambda) {
  Eigen::VectorXd r = design.y - design.gamma * fit.weights;
  r.array() -= fit.intercept;
  return r.squaredNorm() / static_cast<double>(design.y.size()) + lambda * fit.weights.squaredNorm();
}

std::vector<double> default_lambda_grid(double var_y) {
  constexpr int kCount = 50;
  const double lo = std::log(1e-4), hi = std::log(1e2);
  const double base = var_y > 0 ? var_y : 1.0;
  std::vector<double> grid(kCount);
  for (int k = 0; k < kCount; ++k) grid[static_cast<std::size_t>(k)] = base * std::exp(lo + (hi - lo) * k / (kCount - 1));
  return grid;
}

namespace {

// Sufficient statistics of a set of rows for rules of the form
// g_k(x) = out_k + (in_k - out_k) 1{x in H_k}.
struct MembershipStats {
  double count = 0, sum_y = 0, sum_y2 = 0;
  Eigen::VectorXd in_count;   // sum m_ik
  Eigen::VectorXd in_sum_y;   // sum m_ik y_i
  Eigen::MatrixXd co_count;   // sum m_ik m_il

  explicit MembershipStats(Eigen::Index c)
      : in_count(Eigen::VectorXd::Zero(c)), in_sum_y(Eigen::VectorXd::Zero(c)), co_count(Eigen::MatrixXd::Zero(c, c)) {}

  MembershipStats minus(const MembershipStats& o) const {
    MembershipStats r(in_count.size());
    r.count = count - o.count;
    r.sum_y = sum_y - o.sum_y;
    r.sum_y2 = sum_y2 - o.sum_y2;
    r.in_count = in_count - o.in_count;
    r.in_sum_y = in_sum_y - o.in_sum_y;
    r.co_count = co_count - o.co_count;
    return r;
  }
};

}  // namespace

std::vector<double> lambda_cv_curve(std::span<const Rule> rules, const Dataset& data, const FoldAssignment& folds,
                                    std::span<const double> lambdas) {
  if (folds.fold.size() != data.n()) throw Error(ErrorKind::Config, "fold assignment does not match the data");
  std::vector<double> curve;
  curve.reserve(lambdas.size());

  const auto c = static_cast<Eigen::Index>(rules.size());
  const int k = folds.k;
  std::vector<MembershipStats> per_fold(static_cast<std::size_t>(k), MembershipStats(c));
  std::vector<Eigen::Index> members;
  std::vector<double> x(data.p());
  for (std::size_t i = 0; i < data.n(); ++i) {
    for (std::size_t j = 0; j < data.p(); ++j) x[j] = data.x(i, j);
    auto& st = per_fold[static_cast<std::size_t>(folds.fold[i])];
    const double y = data.response()[i];
    st.count += 1;
    st.sum_y += y;
    st.sum_y2 += y * y;
    members.clear();
    for (Eigen::Index r = 0; r < c; ++r)
      if (rules[static_cast<std::size_t>(r)].contains(x)) members.push_back(r);
    for (auto a : members) {
      st.in_count(a) += 1;
      st.in_sum_y(a) += y;
      for (auto b : members) st.co_count(a, b) += 1;
    }
  }
  MembershipStats total(c);
  for (const auto& st : per_fold) {
    total.count += st.count;
    total.sum_y += st.sum_y;
    total.sum_y2 += st.sum_y2;
    total.in_count += st.in_count;
    total.in_sum_y += st.in_sum_y;
    total.co_count += st.co_count;
  }

  // Per-fold quadratic pieces, built once and reused for every lambda.
  struct FoldProblem {
    Eigen::MatrixXd gram;  // centred training Gram / n_train
    Eigen::VectorXd rhs;
    Eigen::VectorXd mean_gamma;
    double mean_y;
    Eigen::VectorXd out, diff;
    MembershipStats held;
    Eigen::VectorXd warm;
  };
  std::vector<FoldProblem> problems;
  for (int f = 0; f < k; ++f) {
    const auto& held = per_fold[static_cast<std::size_t>(f)];
    if (held.count == 0) continue;
    MembershipStats train = total.minus(held);
    Eigen::VectorXd out(c), diff(c);
    for (Eigen::Index r = 0; r < c; ++r) {
      const auto& rule = rules[static_cast<std::size_t>(r)];
      const double n_in = train.in_count(r), n_out = train.count - n_in;
      const double in = n_in > 0 && n_out > 0 ? train.in_sum_y(r) / n_in : rule.y_in;
      const double o = n_in > 0 && n_out > 0 ? (train.sum_y - train.in_sum_y(r)) / n_out : rule.y_out;
      out(r) = o;
      diff(r) = in - o;
    }
    const double n = train.count;
    Eigen::VectorXd dm = diff.cwiseProduct(train.in_count);
    Eigen::VectorXd sum_gamma = n * out + dm;
    Eigen::MatrixXd s = n * out * out.transpose() + out * dm.transpose() + dm * out.transpose() +
                        diff.asDiagonal() * train.co_count * diff.asDiagonal();
    Eigen::VectorXd sum_gamma_y = out * train.sum_y + diff.cwiseProduct(train.in_sum_y);
    FoldProblem fp{(s - sum_gamma * sum_gamma.transpose() / n) / n,
                   (sum_gamma_y - sum_gamma * train.sum_y / n) / n,
                   sum_gamma / n,
                   train.sum_y / n,
                   out,
                   diff,
                   held,
                   Eigen::VectorXd()};
    problems.push_back(std::move(fp));
  }

  for (double lambda : lambdas) {
    double sse = 0;
    for (auto& fp : problems) {
      Eigen::MatrixXd q = fp.gram;
      q.diagonal().array() += lambda;
      Eigen::VectorXd beta = solve_nnls_quadratic(q, fp.rhs, fp.warm.size() ? &fp.warm : nullptr);
      fp.warm = beta;
      const double beta0 = fp.mean_y - fp.mean_gamma.dot(beta);
      // Held-out predictions: a + m_i' b with a = beta0 + out'beta, b = diff o beta.
      const auto& h = fp.held;
      const double a = beta0 + fp.out.dot(beta);
      Eigen::VectorXd b = fp.diff.cwiseProduct(beta);
      sse += h.sum_y2 - 2 * a * h.sum_y - 2 * b.dot(h.in_sum_y) + h.count * a * a + 2 * a * b.dot(h.in_count) +
             b.dot(h.co_count * b);
    }
    curve.push_back(sse / total.count);
  }
  return curve;
}

double tune_lambda(std::span<const Rule> rules, const Dataset& data, const FoldAssignment& folds,
                   std::span<const double> grid) {
  if (grid.empty()) throw Error(ErrorKind::Config, "lambda grid is empty");
  std::vector<double> lambdas(grid.begin(), grid.end());
  std::sort(lambdas.begin(), lambdas.end());
  if (lambdas.size() == 1 || rules.empty()) return lambdas.back();
  const auto curve = lambda_cv_curve(rules, data, folds, lambdas);
  std::size_t best = 0;
  for (std::size_t l = 1; l < curve.size(); ++l)
    if (curve[l] <= curve[best]) best = l;
  return lambdas[best];
}

std::vector<Path> SirusModel::paths() const {
  std::vector<Path> out;
  out.reserve(rules.size());
  for (const auto& r : rules) out.push_back(r.path);
  return out;
}

double predict(const SirusModel& model, std::span<const double> x) {
  if (x.size() != model.schema.feature_names.size())
    throw Error(ErrorKind::Data, "query has " + std::to_string(x.size()) + " features, model expects " +
                                     std::to_string(model.schema.feature_names.size()));
  double out = model.intercept;
  for (std::size_t k = 0; k < model.rules.size(); ++k) out += model.weights[k] * rule_eval(model.rules[k], x);
  return out;
}

std::vector<double> predict(const SirusModel& model, const Dataset& data) {
  std::vector<double> out(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) out[i] = predict(model, data.row(i));
  return out;
}

}  // namespace sirus
