#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ruleopt {

/// Dense row-major 0/1 matrix.
struct BinaryMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> data;

  BinaryMatrix() = default;
  BinaryMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0) {}

  std::uint8_t& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  std::uint8_t at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  std::span<const std::uint8_t> row(std::size_t i) const {
    return {data.data() + i * cols, cols};
  }
  std::span<std::uint8_t> row(std::size_t i) {
    return {data.data() + i * cols, cols};
  }
};

enum class ColumnType { Continuous, Binary, Categorical };

struct ColumnSchema {
  std::string name;
  ColumnType type = ColumnType::Continuous;
};

struct LabelSchema {
  std::string column;
  std::string positive_value;
};

struct TableSchema {
  std::vector<ColumnSchema> columns;  // feature columns; the label is separate
  LabelSchema label;
};

/// One ingested feature column. Continuous and binary columns fill
/// `numeric`; categorical columns fill `text`.
struct RawColumn {
  ColumnSchema schema;
  std::vector<double> numeric;
  std::vector<std::string> text;
};

struct RawTable {
  std::vector<RawColumn> features;
  std::vector<std::uint8_t> labels;
  std::size_t rows = 0;
  LabelSchema label_schema;
};

/// How one binary feature column was derived from the source table.
struct FeatureProvenance {
  enum class Kind { Pad, Threshold, Binary, Category };
  Kind kind = Kind::Pad;
  std::string source;        // original column name
  double threshold = 0.0;    // Kind::Threshold only
  std::string category;      // Kind::Category only
  bool negated = false;      // Threshold: false => "<= t", true => "> t"
  int negation_partner = -1; // column index of the complementary feature
};

/// Binarized training data. Column 0 is the constant all-ones pad
/// feature named "TRUE"; every other column has its negation present
/// as another column (provenance records the pairing).
struct BinaryDataset {
  BinaryMatrix a;                        // n x (d+1)
  std::vector<std::uint8_t> y;           // length n
  std::vector<std::string> feature_names;
  std::vector<FeatureProvenance> provenance;

  std::size_t num_samples() const { return a.rows; }
  std::size_t num_features() const { return a.cols; }  // d+1, pad included
};

struct FoldPlan {
  int k = 0;
  std::vector<int> assignment;  // length n, values in [0, k)
};

/// Raw CSV reading (RFC 4180 quoting). Returns header + string cells.
struct CsvFile {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
CsvFile read_csv_file(const std::string& path);

/// Parses and type-checks a CSV against the schema. Throws
/// std::runtime_error on missing file, missing values, unparseable
/// cells, unknown label values, or an empty table.
RawTable load_csv(const std::string& path, const TableSchema& schema);

/// Quantile binarization. Continuous columns get up to `num_thresholds`
/// distinct thresholds at the q/(num_thresholds+1) quantiles plus the
/// negation of every test; binary and categorical columns pass through
/// as indicator/negation pairs. Constant columns emit nothing.
BinaryDataset binarize(const RawTable& table, int num_thresholds);

/// Applies an existing feature mapping to new raw rows (no quantile
/// re-estimation). Columns referenced by the provenance must exist in
/// the table. Labels are copied from the table when present.
BinaryDataset binarize_with_provenance(const RawTable& table,
                                       const std::vector<std::string>& feature_names,
                                       const std::vector<FeatureProvenance>& provenance);

/// Seeded per-class round-robin fold assignment. Pure function of
/// (y, k, seed).
FoldPlan stratified_folds(std::span<const std::uint8_t> y, int k, std::uint64_t seed);

/// Row subset/reorder; columns and provenance unchanged. Indices must
/// be in range and duplicate-free.
BinaryDataset subset(const BinaryDataset& data, std::span<const std::size_t> indices);

/// Raw-row subset/reorder with the same index rules.
RawTable subset(const RawTable& table, std::span<const std::size_t> indices);

/// Empirical quantile with linear interpolation between order
/// statistics; `sorted` must be ascending and non-empty.
double quantile(std::span<const double> sorted, double p);

}  // namespace ruleopt
