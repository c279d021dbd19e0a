// Slow, independent reference implementations used by the tests.
#pragma once

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "sirus/data.hpp"
#include "sirus/rules.hpp"

namespace oracle {

using Rational = boost::multiprecision::cpp_rational;

// Cuts of one column: sorted value at position ceil(n r / q), first rank kept on ties.
inline std::vector<sirus::QuantileCut> quantile_cuts(std::vector<double> column, int q) {
  std::sort(column.begin(), column.end());
  const auto n = static_cast<long long>(column.size());
  std::vector<sirus::QuantileCut> out;
  if (column.front() == column.back()) return out;
  for (int r = 1; r < q; ++r) {
    long long pos = (n * r + q - 1) / q;  // 1-based
    const double v = column[static_cast<std::size_t>(pos - 1)];
    bool seen = false;
    for (const auto& c : out) seen = seen || c.value == v;
    if (!seen) out.push_back({r, v});
  }
  return out;
}

// Exact rank of a dense rational matrix (rows x cols).
inline std::size_t rank(std::vector<std::vector<Rational>> m) {
  std::size_t r = 0;
  const std::size_t rows = m.size(), cols = rows ? m[0].size() : 0;
  for (std::size_t c = 0; c < cols && r < rows; ++c) {
    std::size_t piv = r;
    while (piv < rows && m[piv][c] == 0) ++piv;
    if (piv == rows) continue;
    std::swap(m[piv], m[r]);
    for (std::size_t i = 0; i < rows; ++i) {
      if (i == r || m[i][c] == 0) continue;
      const Rational f = m[i][c] / m[r][c];
      for (std::size_t k = c; k < cols; ++k) m[i][k] -= f * m[r][k];
    }
    ++r;
  }
  return r;
}

// Rank of [1, indicator(P_1), ..., indicator(P_m)] over the cells cut out by
// the ranks that the paths use. A cell of feature j is represented by a
// virtual rank: 0 below every cut, else the rank of its lower cut.
inline std::size_t cell_rank_with_ones(const std::vector<sirus::Path>& paths) {
  std::map<int, std::set<int>> used;
  for (const auto& p : paths)
    for (const auto& c : p.constraints) used[c.feature].insert(c.rank);
  std::vector<int> features;
  std::vector<std::vector<int>> levels;
  for (auto& [j, ranks] : used) {
    features.push_back(j);
    std::vector<int> l{0};
    l.insert(l.end(), ranks.begin(), ranks.end());
    levels.push_back(l);
  }
  std::vector<std::vector<Rational>> cells;
  std::vector<std::size_t> idx(features.size(), 0);
  while (true) {
    std::vector<Rational> row{1};
    for (const auto& p : paths) {
      bool in = true;
      for (const auto& c : p.constraints) {
        const auto f = static_cast<std::size_t>(std::find(features.begin(), features.end(), c.feature) - features.begin());
        const int v = levels[f][idx[f]];
        in = in && (c.side == sirus::Side::Left ? v < c.rank : v >= c.rank);
      }
      row.push_back(in ? 1 : 0);
    }
    cells.push_back(row);
    std::size_t d = 0;
    while (d < idx.size() && ++idx[d] == levels[d].size()) idx[d++] = 0;
    if (d == idx.size()) break;
  }
  return rank(cells);
}

// P(X <= k), X ~ Binomial(m, p), by exact rational summation. The double p is
// converted exactly.
inline Rational power(Rational base, unsigned e) {
  Rational r = 1;
  for (; e; e >>= 1, base *= base)
    if (e & 1) r *= base;
  return r;
}

inline double binomial_cdf(long long k, long long m, double p) {
  if (k < 0) return 0.0;
  if (k >= m) return 1.0;
  const Rational pr(p), qr = Rational(1) - pr;
  Rational sum = 0;
  boost::multiprecision::cpp_int choose = 1;
  for (long long i = 0; i <= k; ++i) {
    if (i > 0) choose = choose * (m - i + 1) / i;
    sum += Rational(choose) * power(pr, static_cast<unsigned>(i)) *
           power(qr, static_cast<unsigned>(m - i));
  }
  return static_cast<double>(sum);
}

// Projected-gradient (accelerated, with restart) minimiser of
//   (1/n)||y - b0 - G b||^2 + lambda ||b||^2,  b >= 0, b0 free.
struct RidgeSolution {
  std::vector<double> beta;
  double intercept;
};

inline RidgeSolution nn_ridge_projected_gradient(const std::vector<std::vector<double>>& g, const std::vector<double>& y,
                                                 double lambda, int iterations = 400000) {
  const std::size_t n = y.size(), c = g.empty() ? 0 : g[0].size();
  std::vector<double> mean_g(c, 0.0);
  double mean_y = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_y += y[i] / n;
    for (std::size_t k = 0; k < c; ++k) mean_g[k] += g[i][k] / n;
  }
  // Q = Gc'Gc/n + lambda I, r = Gc'yc/n; objective b'Qb - 2r'b.
  std::vector<std::vector<double>> q(c, std::vector<double>(c, 0.0));
  std::vector<double> r(c, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < c; ++a) {
      const double ga = g[i][a] - mean_g[a];
      r[a] += ga * (y[i] - mean_y) / n;
      for (std::size_t b = 0; b < c; ++b) q[a][b] += ga * (g[i][b] - mean_g[b]) / n;
    }
  for (std::size_t a = 0; a < c; ++a) q[a][a] += lambda;
  double lip = 0;
  for (std::size_t a = 0; a < c; ++a) {
    double row = 0;
    for (std::size_t b = 0; b < c; ++b) row += std::fabs(q[a][b]);
    lip = std::max(lip, row);
  }
  const double step = 1.0 / (2.0 * lip);
  std::vector<double> x(c, 0.0), z(c, 0.0), prev(c, 0.0), grad(c);
  double t = 1.0;
  auto objective = [&](const std::vector<double>& b) {
    double v = 0;
    for (std::size_t a = 0; a < c; ++a) {
      double qb = 0;
      for (std::size_t k = 0; k < c; ++k) qb += q[a][k] * b[k];
      v += b[a] * qb - 2 * r[a] * b[a];
    }
    return v;
  };
  double last = objective(x);
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t a = 0; a < c; ++a) {
      double qz = 0;
      for (std::size_t k = 0; k < c; ++k) qz += q[a][k] * z[k];
      grad[a] = 2 * (qz - r[a]);
    }
    prev = x;
    double moved = 0;
    for (std::size_t a = 0; a < c; ++a) {
      x[a] = std::max(0.0, z[a] - step * grad[a]);
      moved = std::max(moved, std::fabs(x[a] - prev[a]));
    }
    const double now = objective(x);
    if (now > last) {  // restart momentum
      t = 1.0;
      z = x;
    } else {
      const double tn = (1 + std::sqrt(1 + 4 * t * t)) / 2;
      for (std::size_t a = 0; a < c; ++a) z[a] = x[a] + (t - 1) / tn * (x[a] - prev[a]);
      t = tn;
    }
    last = now;
    if (moved < 1e-16) break;
  }
  double b0 = mean_y;
  for (std::size_t a = 0; a < c; ++a) b0 -= mean_g[a] * x[a];
  return {x, b0};
}

}  // namespace oracle
