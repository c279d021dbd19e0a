#include "sirus/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "sirus/error.hpp"

namespace sirus {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool parse_number(const std::string& cell, double& out) {
  std::string t = trim(cell);
  if (t.empty()) return false;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name) {
  auto it = std::find(header.begin(), header.end(), name);
  return it == header.end() ? header.size() : static_cast<std::size_t>(it - header.begin());
}

}  // namespace

Dataset::Dataset(std::vector<std::string> feature_names, std::vector<double> columns,
                 std::vector<double> response, std::string response_name)
    : response_name_(std::move(response_name)),
      columns_(std::move(columns)),
      response_(std::move(response)) {
  schema_.feature_names = std::move(feature_names);
  if (columns_.size() != schema_.feature_names.size() * response_.size())
    throw Error(ErrorKind::Data, "feature matrix size does not match n x p");
  for (double y : response_)
    if (!std::isfinite(y)) throw Error(ErrorKind::Data, "non-finite response value");
}

Dataset Dataset::from_rows(std::vector<std::string> feature_names,
                           const std::vector<std::vector<double>>& rows,
                           std::vector<double> response, std::string response_name) {
  const std::size_t n = rows.size();
  const std::size_t p = feature_names.size();
  if (response.size() != n) throw Error(ErrorKind::Data, "response length differs from row count");
  std::vector<double> columns(n * p);
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != p) throw Error(ErrorKind::Data, "row width differs from feature count");
    for (std::size_t j = 0; j < p; ++j) columns[j * n + i] = rows[i][j];
  }
  return Dataset(std::move(feature_names), std::move(columns), std::move(response),
                 std::move(response_name));
}

std::vector<double> Dataset::row(std::size_t i) const {
  std::vector<double> r(p());
  for (std::size_t j = 0; j < p(); ++j) r[j] = x(i, j);
  return r;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  const std::size_t m = rows.size();
  std::vector<double> cols(m * p());
  std::vector<double> y(m);
  for (std::size_t j = 0; j < p(); ++j)
    for (std::size_t r = 0; r < m; ++r) cols[j * m + r] = x(rows[r], j);
  for (std::size_t r = 0; r < m; ++r) y[r] = response_[rows[r]];
  Dataset out(schema_.feature_names, std::move(cols), std::move(y), response_name_);
  out.schema_ = schema_;
  return out;
}

std::vector<std::vector<std::string>> read_csv(std::istream& in) {
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) text.erase(0, 3);

  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  auto end_record = [&] {
    record.push_back(std::move(field));
    field.clear();
    // A blank line is not a record.
    if (!(record.size() == 1 && record[0].empty() && !field_started)) records.push_back(std::move(record));
    record.clear();
    field_started = false;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      in_quotes = true;
      field_started = true;
    } else if (c == ',') {
      record.push_back(std::move(field));
      field.clear();
      field_started = true;
    } else if (c == '\r') {
      if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
      end_record();
    } else if (c == '\n') {
      end_record();
    } else {
      field += c;
      field_started = true;
    }
  }
  if (in_quotes) throw Error(ErrorKind::Data, "unterminated quoted field in CSV");
  if (field_started || !field.empty() || !record.empty()) end_record();
  return records;
}

bool is_missing_cell(const std::string& cell) {
  std::string t = trim(cell);
  return t.empty() || t == "NA" || t == "NaN" || t == "nan" || t == "?";
}

Dataset parse_dataset(std::istream& in, const std::string& response_column,
                      const std::vector<std::string>& categorical_columns) {
  auto records = read_csv(in);
  if (records.empty()) throw Error(ErrorKind::Data, "CSV has no header row");
  const auto header = records.front();
  const std::size_t width = header.size();

  const std::size_t response_idx = column_index(header, response_column);
  if (response_idx == width)
    throw Error(ErrorKind::Data, "response column '" + response_column + "' not found");

  std::vector<bool> is_categorical(width, false);
  for (const auto& name : categorical_columns) {
    std::size_t idx = column_index(header, name);
    if (idx == width) throw Error(ErrorKind::Data, "categorical column '" + name + "' not found");
    if (idx == response_idx)
      throw Error(ErrorKind::Config, "response column cannot be categorical");
    is_categorical[idx] = true;
  }

  // Keep rows without missing cells.
  std::vector<const std::vector<std::string>*> kept;
  std::size_t dropped = 0;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != width)
      throw Error(ErrorKind::Data, "line " + std::to_string(r + 1) + " has " +
                                       std::to_string(rec.size()) + " fields, expected " +
                                       std::to_string(width));
    bool missing = std::any_of(rec.begin(), rec.end(), is_missing_cell);
    if (missing)
      ++dropped;
    else
      kept.push_back(&rec);
  }
  if (kept.empty()) throw Error(ErrorKind::Data, "no usable rows after dropping missing values");
  if (kept.size() < 2) throw Error(ErrorKind::Data, "at least two usable rows are required");

  FeatureSchema schema;
  std::vector<std::vector<double>> feature_columns;
  for (std::size_t c = 0; c < width; ++c) {
    if (c == response_idx) continue;
    if (is_categorical[c]) {
      std::set<std::string> levels;
      for (auto* rec : kept) levels.insert(trim((*rec)[c]));
      CategoricalColumn cat{header[c], {levels.begin(), levels.end()}};
      for (const auto& level : cat.levels) {
        schema.feature_names.push_back(header[c] + "=" + level);
        std::vector<double> col;
        col.reserve(kept.size());
        for (auto* rec : kept) col.push_back(trim((*rec)[c]) == level ? 1.0 : 0.0);
        feature_columns.push_back(std::move(col));
      }
      schema.categoricals.push_back(std::move(cat));
    } else {
      schema.feature_names.push_back(header[c]);
      std::vector<double> col;
      col.reserve(kept.size());
      for (std::size_t r = 0; r < kept.size(); ++r) {
        double v;
        if (!parse_number((*kept[r])[c], v))
          throw Error(ErrorKind::Data, "non-numeric value '" + (*kept[r])[c] + "' in column '" +
                                           header[c] + "'");
        col.push_back(v);
      }
      feature_columns.push_back(std::move(col));
    }
  }
  if (feature_columns.empty()) throw Error(ErrorKind::Data, "dataset has no feature column");

  std::vector<double> y;
  y.reserve(kept.size());
  for (auto* rec : kept) {
    double v;
    if (!parse_number((*rec)[response_idx], v))
      throw Error(ErrorKind::Data, "non-numeric response value '" + (*rec)[response_idx] + "'");
    y.push_back(v);
  }

  const std::size_t n = kept.size();
  std::vector<double> columns;
  columns.reserve(n * feature_columns.size());
  for (auto& col : feature_columns) columns.insert(columns.end(), col.begin(), col.end());

  Dataset data(schema.feature_names, std::move(columns), std::move(y), response_column);
  data.set_schema(std::move(schema));
  data.set_dropped_rows(dropped);
  return data;
}

Dataset load_dataset(const std::string& path, const std::string& response_column,
                     const std::vector<std::string>& categorical_columns) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open dataset '" + path + "'");
  return parse_dataset(in, response_column, categorical_columns);
}

std::vector<std::vector<double>> load_query(std::istream& in, const FeatureSchema& schema) {
  auto records = read_csv(in);
  if (records.empty()) return {};
  const auto& header = records.front();

  // For each feature: source column index and, for one-hot features, the level.
  struct Source {
    std::size_t column;
    const std::string* level;
  };
  std::map<std::string, const CategoricalColumn*> cat_by_feature;
  std::map<std::string, std::string> level_by_feature;
  for (const auto& cat : schema.categoricals)
    for (const auto& level : cat.levels) {
      cat_by_feature[cat.name + "=" + level] = &cat;
      level_by_feature[cat.name + "=" + level] = level;
    }

  std::vector<Source> sources;
  for (const auto& name : schema.feature_names) {
    auto it = cat_by_feature.find(name);
    const std::string& column = it == cat_by_feature.end() ? name : it->second->name;
    std::size_t idx = column_index(header, column);
    if (idx == header.size())
      throw Error(ErrorKind::Data, "query is missing feature column '" + column + "'");
    sources.push_back({idx, it == cat_by_feature.end() ? nullptr : &level_by_feature[name]});
  }

  std::vector<std::vector<double>> rows;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != header.size())
      throw Error(ErrorKind::Data, "query line " + std::to_string(r + 1) + " has the wrong field count");
    std::vector<double> row(sources.size());
    for (std::size_t j = 0; j < sources.size(); ++j) {
      const std::string& cell = rec[sources[j].column];
      if (sources[j].level) {
        row[j] = trim(cell) == *sources[j].level ? 1.0 : 0.0;
      } else if (!parse_number(cell, row[j])) {
        throw Error(ErrorKind::Data, "unparseable value '" + cell + "' on query line " +
                                         std::to_string(r + 1));
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

const QuantileCut* QuantileGrid::find(std::size_t feature, int rank) const {
  if (feature >= cuts.size()) return nullptr;
  const auto& fc = cuts[feature];
  auto it = std::lower_bound(fc.begin(), fc.end(), rank,
                             [](const QuantileCut& c, int r) { return c.rank < r; });
  return it != fc.end() && it->rank == rank ? &*it : nullptr;
}

double QuantileGrid::cut_value(std::size_t feature, int rank) const {
  const QuantileCut* c = find(feature, rank);
  if (!c)
    throw Error(ErrorKind::InvalidPath, "no quantile cut of rank " + std::to_string(rank) +
                                            " for feature " + std::to_string(feature));
  return c->value;
}

std::size_t QuantileGrid::bin(std::size_t feature, double value) const {
  const auto& fc = cuts[feature];
  auto it = std::upper_bound(fc.begin(), fc.end(), value,
                             [](double v, const QuantileCut& c) { return v < c.value; });
  return static_cast<std::size_t>(it - fc.begin());
}

QuantileGrid compute_quantile_grid(const Dataset& data, int q) {
  if (q < 2) throw Error(ErrorKind::Config, "quantile count q must be at least 2");
  QuantileGrid grid;
  grid.q = q;
  grid.cuts.resize(data.p());
  const std::size_t n = data.n();
  std::vector<double> sorted;
  for (std::size_t j = 0; j < data.p(); ++j) {
    auto col = data.column(j);
    sorted.assign(col.begin(), col.end());
    std::sort(sorted.begin(), sorted.end());
    if (sorted.empty() || sorted.front() == sorted.back()) continue;
    auto& out = grid.cuts[j];
    for (int r = 1; r < q; ++r) {
      // Lower empirical quantile: order statistic at ceil(n r / q), 1-based.
      std::size_t pos = (n * static_cast<std::size_t>(r) + q - 1) / static_cast<std::size_t>(q);
      double v = sorted[pos - 1];
      if (out.empty() || out.back().value < v) out.push_back({r, v});
    }
  }
  return grid;
}

std::vector<std::size_t> FoldAssignment::test_indices(int f) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold.size(); ++i)
    if (fold[i] == f) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldAssignment::train_indices(int f) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold.size(); ++i)
    if (fold[i] != f) out.push_back(i);
  return out;
}

FoldAssignment kfold_split(std::size_t n, int k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorKind::Config, "fold count must be at least 2");
  if (static_cast<std::size_t>(k) > n)
    throw Error(ErrorKind::Config, "fold count " + std::to_string(k) + " exceeds sample count " +
                                       std::to_string(n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  FoldAssignment out{k, seed, std::vector<int>(n)};
  for (std::size_t i = 0; i < n; ++i) out.fold[order[i]] = static_cast<int>(i % k);
  return out;
}

}  // namespace sirus
