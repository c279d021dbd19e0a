#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <span>
#include <string>
#include <vector>

namespace sirus {

// A categorical input column expanded into one 0/1 feature per level.
struct CategoricalColumn {
  std::string name;
  std::vector<std::string> levels;
};

// Everything needed to turn a raw CSV row into a feature vector.
struct FeatureSchema {
  std::vector<std::string> feature_names;
  std::vector<CategoricalColumn> categoricals;
};

// Numeric regression data, features stored column-major.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<std::string> feature_names, std::vector<double> columns,
          std::vector<double> response, std::string response_name = "y");

  static Dataset from_rows(std::vector<std::string> feature_names,
                           const std::vector<std::vector<double>>& rows,
                           std::vector<double> response,
                           std::string response_name = "y");

  std::size_t n() const { return response_.size(); }
  std::size_t p() const { return schema_.feature_names.size(); }

  double x(std::size_t i, std::size_t j) const { return columns_[j * n() + i]; }
  std::span<const double> column(std::size_t j) const {
    return {columns_.data() + j * n(), n()};
  }
  std::span<const double> response() const { return response_; }
  std::vector<double> row(std::size_t i) const;

  const std::vector<std::string>& feature_names() const { return schema_.feature_names; }
  const std::string& response_name() const { return response_name_; }
  const FeatureSchema& schema() const { return schema_; }
  std::size_t dropped_rows() const { return dropped_rows_; }

  void set_schema(FeatureSchema schema) { schema_ = std::move(schema); }
  void set_dropped_rows(std::size_t count) { dropped_rows_ = count; }

  // Rows in the given order; schema and names are preserved.
  Dataset subset(std::span<const std::size_t> rows) const;

 private:
  FeatureSchema schema_;
  std::string response_name_;
  std::vector<double> columns_;
  std::vector<double> response_;
  std::size_t dropped_rows_ = 0;
};

// RFC-4180 reader. Returns every record including the header.
std::vector<std::vector<std::string>> read_csv(std::istream& in);

bool is_missing_cell(const std::string& cell);

// Loads a headed CSV. Categorical columns are one-hot encoded into
// "<column>=<level>" features; rows with a missing cell are dropped.
Dataset load_dataset(const std::string& path, const std::string& response_column,
                     const std::vector<std::string>& categorical_columns = {});
Dataset parse_dataset(std::istream& in, const std::string& response_column,
                      const std::vector<std::string>& categorical_columns = {});

// Encodes query rows against a training schema. Extra columns are ignored;
// a missing feature column or a non-numeric cell is a data error.
std::vector<std::vector<double>> load_query(std::istream& in, const FeatureSchema& schema);

struct QuantileCut {
  int rank;  // quantile index in 1..q-1
  double value;

  bool operator==(const QuantileCut&) const = default;
};

// Allowed split values per feature. Within a feature, ranks and values are
// both strictly increasing.
struct QuantileGrid {
  int q = 10;
  std::vector<std::vector<QuantileCut>> cuts;

  const QuantileCut* find(std::size_t feature, int rank) const;
  double cut_value(std::size_t feature, int rank) const;
  // Number of cuts of `feature` that are <= value.
  std::size_t bin(std::size_t feature, double value) const;

  bool operator==(const QuantileGrid&) const = default;
};

QuantileGrid compute_quantile_grid(const Dataset& data, int q);

struct FoldAssignment {
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<int> fold;  // fold id of each sample

  std::vector<std::size_t> test_indices(int f) const;
  std::vector<std::size_t> train_indices(int f) const;
};

FoldAssignment kfold_split(std::size_t n, int k, std::uint64_t seed);

}  // namespace sirus
