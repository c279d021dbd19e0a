#include "sirus/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sirus/error.hpp"
#include "sirus/metrics.hpp"
#include "sirus/parallel.hpp"
#include "sirus/tuning.hpp"

namespace sirus {

namespace {

constexpr std::uint64_t kTreeStream = 0x7472656573ULL;  // "trees"

// Sum-of-squares form of the reduction: (SL^2/nL + SR^2/nR - S^2/N) / N.
double reduction_from_sums(double n_left, double sum_left, double n_total, double sum_total) {
  const double n_right = n_total - n_left;
  const double sum_right = sum_total - sum_left;
  return (sum_left * sum_left / n_left + sum_right * sum_right / n_right - sum_total * sum_total / n_total) /
         n_total;
}

bool is_pure(const BinnedData& data, std::span<const std::uint32_t> samples) {
  const double first = data.y(samples[0]);
  for (auto i : samples)
    if (data.y(i) != first) return false;
  return true;
}

void draw_features(std::size_t p, int mtry, std::mt19937_64& rng, std::vector<std::size_t>& out) {
  std::vector<std::size_t> all(p);
  std::iota(all.begin(), all.end(), 0);
  const auto m = static_cast<std::size_t>(mtry);
  for (std::size_t k = 0; k < m; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, p - 1);
    std::swap(all[k], all[pick(rng)]);
  }
  out.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(m));
  std::sort(out.begin(), out.end());
}

void partition(const BinnedData& data, std::span<const std::uint32_t> samples, const SplitChoice& split,
               std::vector<std::uint32_t>& left, std::vector<std::uint32_t>& right) {
  left.clear();
  right.clear();
  for (auto i : samples) (data.bin(i, split.feature) <= split.cut_index ? left : right).push_back(i);
}

struct ShallowGrower {
  const BinnedData& data;
  const ForestParams& params;
  std::mt19937_64& rng;
  int mtry;
  TreePaths paths;
  std::vector<std::size_t> features;

  void grow(std::span<const std::uint32_t> samples, int depth, std::vector<Constraint>& path) {
    if (depth >= params.max_depth) return;
    if (samples.size() < 2 * static_cast<std::size_t>(params.min_node_size)) return;
    if (samples.size() < 2 || is_pure(data, samples)) return;
    draw_features(data.p(), mtry, rng, features);
    auto split = find_best_split(data, samples, features);
    if (!split) return;

    std::vector<std::uint32_t> left, right;
    partition(data, samples, *split, left, right);
    const int rank = data.rank(split->feature, split->cut_index);
    const int feature = static_cast<int>(split->feature);
    for (Side side : {Side::Left, Side::Right}) {
      path.push_back({feature, rank, side});
      paths.push_back(canonicalize_path(path));
      grow(side == Side::Left ? left : right, depth + 1, path);
      path.pop_back();
    }
  }
};

}  // namespace

int ForestParams::resolved_mtry(std::size_t p) const {
  int m = mtry ? *mtry : std::max(static_cast<int>(p / 3), 2);
  return std::min(m, static_cast<int>(p));
}

void ForestParams::validate(std::size_t p) const {
  if (p == 0) throw Error(ErrorKind::Config, "dataset has no feature");
  if (num_trees && *num_trees < 1) throw Error(ErrorKind::Config, "number of trees must be positive");
  if (max_depth < 1) throw Error(ErrorKind::Config, "max_depth must be positive");
  if (mtry && (*mtry < 1 || static_cast<std::size_t>(*mtry) > p))
    throw Error(ErrorKind::Config, "mtry must lie in [1, p]");
  if (q < 2) throw Error(ErrorKind::Config, "q must be at least 2");
  if (min_node_size < 1) throw Error(ErrorKind::Config, "min_node_size must be positive");
  if (sampling == Sampling::Subsample && !(subsample_rate > 0.0 && subsample_rate <= 1.0))
    throw Error(ErrorKind::Config, "subsample rate must lie in (0, 1]");
  if (!(adaptive.alpha > 0.0)) throw Error(ErrorKind::Config, "alpha must be positive");
  if (adaptive.batch_size < 1 || adaptive.max_trees < 1)
    throw Error(ErrorKind::Config, "adaptive batch size and tree cap must be positive");
}

double cart_variance_reduction(std::span<const double> responses, const std::vector<bool>& left_mask) {
  if (left_mask.size() != responses.size())
    throw Error(ErrorKind::InvalidSplit, "mask length differs from node size");
  double n_left = 0, sum_left = 0, sum = 0;
  for (std::size_t i = 0; i < responses.size(); ++i) {
    sum += responses[i];
    if (left_mask[i]) {
      n_left += 1;
      sum_left += responses[i];
    }
  }
  const double n = static_cast<double>(responses.size());
  if (n_left == 0 || n_left == n) throw Error(ErrorKind::InvalidSplit, "split leaves one side empty");
  // Two-pass variances keep constant responses at exactly zero.
  auto variance = [&](bool side, double count, double mean) {
    double v = 0;
    for (std::size_t i = 0; i < responses.size(); ++i)
      if (left_mask[i] == side) v += (responses[i] - mean) * (responses[i] - mean);
    return v / count;
  };
  const double n_right = n - n_left;
  const double mean_left = sum_left / n_left;
  const double mean_right = (sum - sum_left) / n_right;
  const double mean = sum / n;
  double total = 0;
  for (double y : responses) total += (y - mean) * (y - mean);
  total /= n;
  const double r = total - n_left / n * variance(true, n_left, mean_left) - n_right / n * variance(false, n_right, mean_right);
  return std::max(r, 0.0);
}

BinnedData::BinnedData(const Dataset& data, const QuantileGrid& grid)
    : n_(data.n()), p_(data.p()), bins_(data.n() * data.p()), y_(data.response().begin(), data.response().end()),
      grid_(&grid) {
  if (grid.cuts.size() != p_) throw Error(ErrorKind::Config, "quantile grid does not match the dataset");
  for (std::size_t j = 0; j < p_; ++j)
    for (std::size_t i = 0; i < n_; ++i) bins_[j * n_ + i] = static_cast<std::uint32_t>(grid.bin(j, data.x(i, j)));
}

std::optional<SplitChoice> find_best_split(const BinnedData& data, std::span<const std::uint32_t> samples,
                                           std::span<const std::size_t> features) {
  thread_local std::vector<double> counts, sums;
  double total_sum = 0;
  for (auto i : samples) total_sum += data.y(i);
  const double total_n = static_cast<double>(samples.size());

  std::optional<SplitChoice> best;
  for (std::size_t j : features) {
    const std::size_t bins = data.num_cuts(j) + 1;
    if (bins < 2) continue;
    counts.assign(bins, 0.0);
    sums.assign(bins, 0.0);
    for (auto i : samples) {
      auto b = data.bin(i, j);
      counts[b] += 1;
      sums[b] += data.y(i);
    }
    // Cut t is usable when both bins <= t and bins > t are occupied.
    double n_left = 0, sum_left = 0;
    for (std::size_t t = 0; t + 1 < bins; ++t) {
      n_left += counts[t];
      sum_left += sums[t];
      if (n_left == 0) continue;
      if (n_left == total_n) break;
      const double r = reduction_from_sums(n_left, sum_left, total_n, total_sum);
      if (!best || r > best->reduction) best = SplitChoice{j, t, r};
    }
  }
  return best;
}

std::vector<std::uint32_t> draw_tree_sample(std::size_t n, const ForestParams& params, std::mt19937_64& rng) {
  std::vector<std::uint32_t> sample;
  if (params.sampling == Sampling::Bootstrap) {
    sample.resize(n);
    std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(n - 1));
    for (auto& s : sample) s = pick(rng);
  } else {
    std::size_t size = static_cast<std::size_t>(std::llround(params.subsample_rate * static_cast<double>(n)));
    size = std::clamp<std::size_t>(size, 1, n);
    std::vector<std::uint32_t> all(n);
    std::iota(all.begin(), all.end(), 0u);
    for (std::size_t k = 0; k < size; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, n - 1);
      std::swap(all[k], all[pick(rng)]);
    }
    sample.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(size));
  }
  std::sort(sample.begin(), sample.end());
  return sample;
}

TreePaths grow_tree(const BinnedData& data, const ForestParams& params, std::mt19937_64& rng) {
  auto sample = draw_tree_sample(data.n(), params, rng);
  ShallowGrower grower{data, params, rng, params.resolved_mtry(data.p()), {}, {}};
  std::vector<Constraint> path;
  grower.grow(sample, 0, path);
  return std::move(grower.paths);
}

TreePaths grow_tree(const Dataset& data, const QuantileGrid& grid, const ForestParams& params,
                    std::mt19937_64& rng) {
  params.validate(data.p());
  BinnedData binned(data, grid);
  return grow_tree(binned, params, rng);
}

void grow_trees(const BinnedData& data, const ForestParams& params, std::int64_t first, std::int64_t count,
                PathFrequencyTable& table) {
  if (count <= 0) return;
  const std::size_t chunks = std::min<std::size_t>(worker_count(), static_cast<std::size_t>(count));
  std::vector<PathFrequencyTable> partial(chunks);
  parallel_for(chunks, [&](std::size_t c) {
    const std::int64_t begin = first + count * static_cast<std::int64_t>(c) / static_cast<std::int64_t>(chunks);
    const std::int64_t end = first + count * static_cast<std::int64_t>(c + 1) / static_cast<std::int64_t>(chunks);
    for (std::int64_t t = begin; t < end; ++t) {
      std::mt19937_64 rng(derive_seed(params.seed, kTreeStream, static_cast<std::uint64_t>(t)));
      partial[c].add_tree(grow_tree(data, params, rng));
    }
  });
  for (const auto& part : partial) table.merge(part);
}

PathFrequencyTable grow_forest(const Dataset& data, const QuantileGrid& grid, const ForestParams& params) {
  params.validate(data.p());
  if (!params.num_trees) return adaptive_num_trees(data, grid, params).table;
  BinnedData binned(data, grid);
  PathFrequencyTable table;
  grow_trees(binned, params, 0, *params.num_trees, table);
  return table;
}

namespace {

struct FullGrower {
  const BinnedData& data;
  const ForestParams& params;
  std::mt19937_64& rng;
  int mtry;
  std::vector<QuantileForest::Node>& nodes;
  std::vector<std::size_t> features;

  std::uint32_t grow(std::span<const std::uint32_t> samples, int depth) {
    const auto id = static_cast<std::uint32_t>(nodes.size());
    nodes.emplace_back();
    double sum = 0;
    for (auto i : samples) sum += data.y(i);
    nodes[id].value = sum / static_cast<double>(samples.size());

    const bool depth_ok = params.max_depth <= 0 || depth < params.max_depth;
    if (!depth_ok || samples.size() < 2 * static_cast<std::size_t>(params.min_node_size) || is_pure(data, samples))
      return id;
    draw_features(data.p(), mtry, rng, features);
    auto split = find_best_split(data, samples, features);
    if (!split) return id;
    std::vector<std::uint32_t> left, right;
    partition(data, samples, *split, left, right);
    nodes[id].feature = static_cast<int>(split->feature);
    nodes[id].cut = data.cut(split->feature, split->cut_index);
    const auto l = grow(left, depth + 1);
    const auto r = grow(right, depth + 1);
    nodes[id].left = l;
    nodes[id].right = r;
    return id;
  }
};

constexpr std::uint64_t kBaselineStream = 0x62617365ULL;  // "base"

}  // namespace

QuantileForest QuantileForest::fit(const Dataset& data, const QuantileGrid& grid, const ForestParams& params) {
  if (params.num_trees && *params.num_trees < 1) throw Error(ErrorKind::Config, "number of trees must be positive");
  if (params.min_node_size < 1) throw Error(ErrorKind::Config, "min_node_size must be positive");
  BinnedData binned(data, grid);
  const std::size_t m = static_cast<std::size_t>(params.num_trees.value_or(500));
  QuantileForest forest;
  forest.trees_.resize(m);
  const int mtry = params.resolved_mtry(data.p());
  parallel_for(m, [&](std::size_t t) {
    std::mt19937_64 rng(derive_seed(params.seed, kBaselineStream, t));
    auto sample = draw_tree_sample(data.n(), params, rng);
    FullGrower grower{binned, params, rng, mtry, forest.trees_[t], {}};
    grower.grow(sample, 0);
  });
  return forest;
}

double QuantileForest::predict(std::span<const double> x) const {
  double total = 0;
  for (const auto& nodes : trees_) {
    std::uint32_t id = 0;
    while (nodes[id].feature >= 0)
      id = x[static_cast<std::size_t>(nodes[id].feature)] < nodes[id].cut ? nodes[id].left : nodes[id].right;
    total += nodes[id].value;
  }
  return total / static_cast<double>(trees_.size());
}

std::vector<double> QuantileForest::predict(const Dataset& data) const {
  std::vector<double> out(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) out[i] = predict(data.row(i));
  return out;
}

double quantile_forest_cv_error(const Dataset& data, const ForestParams& params, int k, int repeats) {
  if (repeats < 1) throw Error(ErrorKind::Config, "repeats must be positive");
  double total = 0;
  for (int r = 0; r < repeats; ++r) {
    auto folds = kfold_split(data.n(), k, derive_seed(params.seed, kBaselineStream + 1, static_cast<std::uint64_t>(r)));
    std::vector<double> pred(data.n());
    for (int f = 0; f < k; ++f) {
      auto train = data.subset(folds.train_indices(f));
      auto test_idx = folds.test_indices(f);
      auto grid = compute_quantile_grid(train, params.q);
      ForestParams fp = params;
      fp.seed = derive_seed(params.seed, kBaselineStream + 2, static_cast<std::uint64_t>(r * k + f));
      auto forest = QuantileForest::fit(train, grid, fp);
      for (auto i : test_idx) pred[i] = forest.predict(data.row(i));
    }
    total += unexplained_variance(pred, data.response());
  }
  return total / repeats;
}

}  // namespace sirus
