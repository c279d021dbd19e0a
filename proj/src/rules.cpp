#include "sirus/rules.hpp"

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <limits>
#include <sstream>

#include "sirus/error.hpp"

namespace sirus {

std::string to_string(const Path& path) {
  std::ostringstream os;
  os << '{';
  for (std::size_t k = 0; k < path.constraints.size(); ++k) {
    const auto& c = path.constraints[k];
    if (k) os << ", ";
    os << '(' << c.feature << ',' << c.rank << ',' << (c.side == Side::Left ? 'L' : 'R') << ')';
  }
  os << '}';
  return os.str();
}

Path canonicalize_path(std::vector<Constraint> raw) {
  if (raw.empty()) throw Error(ErrorKind::InvalidPath, "empty path");
  std::sort(raw.begin(), raw.end());
  raw.erase(std::unique(raw.begin(), raw.end()), raw.end());
  for (std::size_t k = 1; k < raw.size(); ++k)
    if (raw[k].feature == raw[k - 1].feature && raw[k].rank == raw[k - 1].rank)
      throw Error(ErrorKind::InvalidPath, "path constrains feature " +
                                              std::to_string(raw[k].feature) +
                                              " to both sides of the same cut");
  return Path{std::move(raw)};
}

void PathFrequencyTable::add_tree(std::span<const Path> tree_paths) {
  std::vector<const Path*> distinct;
  distinct.reserve(tree_paths.size());
  for (const auto& p : tree_paths) distinct.push_back(&p);
  std::sort(distinct.begin(), distinct.end(), [](auto* a, auto* b) { return *a < *b; });
  distinct.erase(std::unique(distinct.begin(), distinct.end(), [](auto* a, auto* b) { return *a == *b; }),
                 distinct.end());
  for (auto* p : distinct) ++counts_[*p];
  ++num_trees_;
}

void PathFrequencyTable::merge(const PathFrequencyTable& other) {
  for (const auto& [path, c] : other.counts_) counts_[path] += c;
  num_trees_ += other.num_trees_;
}

std::int64_t PathFrequencyTable::count(const Path& path) const {
  auto it = counts_.find(path);
  return it == counts_.end() ? 0 : it->second;
}

double PathFrequencyTable::frequency(const Path& path) const {
  return num_trees_ > 0 ? static_cast<double>(count(path)) / static_cast<double>(num_trees_) : 0.0;
}

std::vector<std::pair<Path, std::int64_t>> PathFrequencyTable::sorted() const {
  std::vector<std::pair<Path, std::int64_t>> out(counts_.begin(), counts_.end());
  // counts_ is already in canonical order, so a stable sort keeps that as tie-break.
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

std::vector<Path> select_paths(const PathFrequencyTable& table, double p0) {
  std::vector<Path> out;
  const double m = static_cast<double>(table.num_trees());
  for (auto& [path, count] : table.sorted()) {
    if (static_cast<double>(count) / m > p0)
      out.push_back(path);
    else
      break;
  }
  return out;
}

// The indicator of a path is expanded in the tensor basis built from the
// constant function and the step functions 1{x_j >= cut_{j,r}}. The product
// of two steps on one feature is the step at the larger cut, so every
// monomial holds at most one step per feature. This basis spans the same
// space as the cell indicators of the quantile grid, so ranks agree.
struct IndependenceFilter::State {
  using Rational = boost::multiprecision::cpp_rational;
  using Monomial = std::vector<std::pair<int, int>>;  // (feature, rank), sorted by feature
  using Vector = std::map<int, Rational>;             // monomial id -> coefficient

  std::map<Monomial, int> ids;
  std::map<int, Vector> basis;  // pivot id -> row with unit pivot as its leading entry

  int intern(const Monomial& m) {
    auto [it, inserted] = ids.emplace(m, static_cast<int>(ids.size()));
    return it->second;
  }

  static Monomial multiply(const Monomial& a, const Monomial& b) {
    Monomial out;
    std::size_t i = 0, k = 0;
    while (i < a.size() || k < b.size()) {
      if (k == b.size() || (i < a.size() && a[i].first < b[k].first)) {
        out.push_back(a[i++]);
      } else if (i == a.size() || b[k].first < a[i].first) {
        out.push_back(b[k++]);
      } else {
        out.emplace_back(a[i].first, std::max(a[i].second, b[k].second));
        ++i;
        ++k;
      }
    }
    return out;
  }

  Vector expand(const Path& path) {
    std::map<Monomial, long long> poly{{Monomial{}, 1}};
    for (const auto& c : path.constraints) {
      Monomial step{{c.feature, c.rank}};
      std::map<Monomial, long long> next;
      for (const auto& [m, coef] : poly) {
        if (c.side == Side::Left) next[m] += coef;
        next[multiply(m, step)] += c.side == Side::Left ? -coef : coef;
      }
      poly.swap(next);
    }
    Vector v;
    for (const auto& [m, coef] : poly)
      if (coef != 0) v[intern(m)] = coef;
    return v;
  }

  // Reduces v against the basis; returns true (and stores it) if a residual remains.
  bool insert(Vector v) {
    while (!v.empty()) {
      auto lead = v.begin();
      auto b = basis.find(lead->first);
      if (b == basis.end()) {
        Rational scale = lead->second;
        for (auto& [id, coef] : v) coef /= scale;
        int pivot = lead->first;
        basis.emplace(pivot, std::move(v));
        return true;
      }
      Rational factor = lead->second;
      for (const auto& [id, coef] : b->second) {
        auto& target = v[id];
        target -= factor * coef;
        if (target == 0) v.erase(id);
      }
    }
    return false;
  }
};

IndependenceFilter::IndependenceFilter() : state_(std::make_unique<State>()) {
  State::Vector ones;
  ones[state_->intern({})] = 1;
  state_->insert(std::move(ones));
}

IndependenceFilter::~IndependenceFilter() = default;
IndependenceFilter::IndependenceFilter(IndependenceFilter&&) noexcept = default;
IndependenceFilter& IndependenceFilter::operator=(IndependenceFilter&&) noexcept = default;

bool IndependenceFilter::try_add(const Path& path) {
  if (state_->insert(state_->expand(path))) {
    ++accepted_;
    return true;
  }
  return false;
}

std::vector<Path> post_treat(std::span<const Path> selected, const QuantileGrid& grid) {
  IndependenceFilter filter;
  std::vector<Path> kept;
  for (const auto& path : selected) {
    for (const auto& c : path.constraints)
      if (!grid.find(static_cast<std::size_t>(c.feature), c.rank))
        throw Error(ErrorKind::InvalidPath, "path " + to_string(path) + " uses a cut absent from the grid");
    if (filter.try_add(path)) kept.push_back(path);
  }
  return kept;
}

bool Rule::contains(std::span<const double> x) const {
  for (const auto& c : conditions)
    if (!c.holds(x[static_cast<std::size_t>(c.feature)])) return false;
  return true;
}

std::vector<Interval> Rule::hyperrectangle(std::size_t p) const {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<Interval> box(p, Interval{-inf, inf});
  for (const auto& c : conditions) {
    auto& b = box[static_cast<std::size_t>(c.feature)];
    if (c.side == Side::Left)
      b.upper = std::min(b.upper, c.cut);
    else
      b.lower = std::max(b.lower, c.cut);
  }
  return box;
}

std::vector<RuleCondition> conditions_from_path(const Path& path, const QuantileGrid& grid) {
  std::vector<RuleCondition> out;
  out.reserve(path.size());
  for (const auto& c : path.constraints)
    out.push_back({c.feature, c.rank, c.side, grid.cut_value(static_cast<std::size_t>(c.feature), c.rank)});
  return out;
}

Rule rule_from_path(const Path& path, const QuantileGrid& grid, const Dataset& data) {
  Rule rule;
  rule.path = path;
  rule.conditions = conditions_from_path(path, grid);
  for (const auto& c : rule.conditions)
    if (static_cast<std::size_t>(c.feature) >= data.p())
      throw Error(ErrorKind::InvalidPath, "path feature index out of range");

  double sum_in = 0.0, sum_out = 0.0;
  auto y = data.response();
  for (std::size_t i = 0; i < data.n(); ++i) {
    bool in = true;
    for (const auto& c : rule.conditions)
      if (!c.holds(data.x(i, static_cast<std::size_t>(c.feature)))) {
        in = false;
        break;
      }
    if (in) {
      sum_in += y[i];
      ++rule.n_in;
    } else {
      sum_out += y[i];
      ++rule.n_out;
    }
  }
  if (rule.n_in == 0 || rule.n_out == 0)
    throw Error(ErrorKind::DegenerateRule, "rule " + to_string(path) + " has an empty side on the training data");
  rule.y_in = sum_in / static_cast<double>(rule.n_in);
  rule.y_out = sum_out / static_cast<double>(rule.n_out);
  return rule;
}

double rule_eval(const Rule& rule, std::span<const double> x) {
  return rule.contains(x) ? rule.y_in : rule.y_out;
}

}  // namespace sirus
