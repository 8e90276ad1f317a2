#include "ruleopt/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace ruleopt {

namespace {

std::string read_whole_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* begin = s.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  return end == begin + s.size() && std::isfinite(out);
}

}  // namespace

CsvFile read_csv_file(const std::string& path) {
  std::string text = read_whole_file(path);
  // strip UTF-8 BOM
  if (text.size() >= 3 && text.compare(0, 3, "\xef\xbb\xbf") == 0) text.erase(0, 3);

  CsvFile out;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool any_field = false;

  auto end_field = [&]() {
    record.push_back(field);
    field.clear();
    any_field = true;
  };
  auto end_record = [&]() {
    end_field();
    if (record.size() == 1 && record[0].empty()) {
      // blank line
    } else if (out.header.empty()) {
      out.header = record;
    } else {
      out.rows.push_back(record);
    }
    record.clear();
    any_field = false;
  };

  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < n && text[i + 1] == '"') {
          field.push_back('"');
          i += 2;
        } else {
          in_quotes = false;
          ++i;
        }
      } else {
        field.push_back(c);
        ++i;
      }
    } else {
      if (c == '"' && field.empty()) {
        in_quotes = true;
        ++i;
      } else if (c == ',') {
        end_field();
        ++i;
      } else if (c == '\r') {
        ++i;  // swallowed; LF (if any) ends the record
        if (i < n && text[i] == '\n') {
          end_record();
          ++i;
        } else {
          end_record();
        }
      } else if (c == '\n') {
        end_record();
        ++i;
      } else {
        field.push_back(c);
        ++i;
      }
    }
  }
  if (in_quotes) throw std::runtime_error("unterminated quoted field in " + path);
  if (any_field || !field.empty()) end_record();
  if (out.header.empty()) throw std::runtime_error("empty CSV: " + path);
  for (auto& row : out.rows)
    if (row.size() != out.header.size())
      throw std::runtime_error("ragged CSV row in " + path);
  return out;
}

RawTable load_csv(const std::string& path, const TableSchema& schema) {
  CsvFile csv = read_csv_file(path);

  auto column_index = [&](const std::string& name) -> std::size_t {
    for (std::size_t j = 0; j < csv.header.size(); ++j)
      if (csv.header[j] == name) return j;
    throw std::runtime_error("schema column not in CSV header: " + name);
  };

  if (csv.rows.empty()) throw std::runtime_error("empty table: " + path);

  RawTable table;
  table.rows = csv.rows.size();
  table.label_schema = schema.label;

  std::size_t label_col = column_index(schema.label.column);

  // reject blank cells anywhere in schema-covered columns
  auto check_present = [&](std::size_t row, std::size_t col) {
    if (csv.rows[row][col].empty()) {
      throw std::runtime_error("missing value at row " + std::to_string(row + 1) +
                               ", column " + csv.header[col]);
    }
  };

  for (const auto& cs : schema.columns) {
    std::size_t j = column_index(cs.name);
    RawColumn col;
    col.schema = cs;
    for (std::size_t i = 0; i < table.rows; ++i) {
      check_present(i, j);
      const std::string& cell = csv.rows[i][j];
      switch (cs.type) {
        case ColumnType::Continuous: {
          double v;
          if (!parse_double(cell, v))
            throw std::runtime_error("unparseable continuous value '" + cell +
                                     "' at row " + std::to_string(i + 1) +
                                     ", column " + cs.name);
          col.numeric.push_back(v);
          break;
        }
        case ColumnType::Binary: {
          if (cell == "0" || cell == "1")
            col.numeric.push_back(cell == "1" ? 1.0 : 0.0);
          else
            throw std::runtime_error("unparseable binary value '" + cell +
                                     "' at row " + std::to_string(i + 1) +
                                     ", column " + cs.name);
          break;
        }
        case ColumnType::Categorical:
          col.text.push_back(cell);
          break;
      }
    }
    table.features.push_back(std::move(col));
  }

  // label: the positive value maps to 1; all remaining rows must share
  // a single other value, which maps to 0
  std::string negative_value;
  bool have_negative = false;
  for (std::size_t i = 0; i < table.rows; ++i) {
    check_present(i, label_col);
    const std::string& cell = csv.rows[i][label_col];
    if (cell == schema.label.positive_value) {
      table.labels.push_back(1);
    } else if (!have_negative || cell == negative_value) {
      negative_value = cell;
      have_negative = true;
      table.labels.push_back(0);
    } else {
      throw std::runtime_error("unknown label value '" + cell + "' at row " +
                               std::to_string(i + 1) + ", column " +
                               schema.label.column);
    }
  }
  return table;
}

double quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty range");
  if (sorted.size() == 1) return sorted[0];
  double pos = p * static_cast<double>(sorted.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(pos));
  if (lo + 1 >= sorted.size()) return sorted.back();
  double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

namespace {

struct PendingFeature {
  std::string name;
  FeatureProvenance prov;
  std::vector<std::uint8_t> values;
};

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

// emits test+negation, skipping constant (zero-information) tests
void emit_pair(std::vector<PendingFeature>& out, const std::string& name_pos,
               const std::string& name_neg, FeatureProvenance prov,
               const std::vector<std::uint8_t>& values) {
  bool any0 = false, any1 = false;
  for (auto v : values) (v ? any1 : any0) = true;
  if (!any0 || !any1) return;  // constant on the training rows

  PendingFeature pos;
  pos.name = name_pos;
  pos.prov = prov;
  pos.values = values;

  PendingFeature neg;
  neg.name = name_neg;
  neg.prov = prov;
  neg.prov.negated = !prov.negated;
  neg.values.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) neg.values[i] = values[i] ? 0 : 1;

  out.push_back(std::move(pos));
  out.push_back(std::move(neg));
}

}  // namespace

BinaryDataset binarize(const RawTable& table, int num_thresholds) {
  if (num_thresholds < 1) throw std::invalid_argument("num_thresholds must be >= 1");
  if (table.rows == 0) throw std::invalid_argument("cannot binarize an empty table");

  std::vector<PendingFeature> pending;

  for (const auto& col : table.features) {
    switch (col.schema.type) {
      case ColumnType::Continuous: {
        std::vector<double> sorted(col.numeric);
        std::sort(sorted.begin(), sorted.end());
        std::vector<double> thresholds;
        for (int q = 1; q <= num_thresholds; ++q) {
          double p = static_cast<double>(q) / (num_thresholds + 1.0);
          thresholds.push_back(quantile(sorted, p));
        }
        thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                         thresholds.end());
        for (double t : thresholds) {
          std::vector<std::uint8_t> vals(table.rows);
          for (std::size_t i = 0; i < table.rows; ++i)
            vals[i] = col.numeric[i] <= t ? 1 : 0;
          FeatureProvenance prov;
          prov.kind = FeatureProvenance::Kind::Threshold;
          prov.source = col.schema.name;
          prov.threshold = t;
          prov.negated = false;
          emit_pair(pending, col.schema.name + " <= " + format_number(t),
                    col.schema.name + " > " + format_number(t), prov, vals);
        }
        break;
      }
      case ColumnType::Binary: {
        std::vector<std::uint8_t> vals(table.rows);
        for (std::size_t i = 0; i < table.rows; ++i)
          vals[i] = col.numeric[i] != 0.0 ? 1 : 0;
        FeatureProvenance prov;
        prov.kind = FeatureProvenance::Kind::Binary;
        prov.source = col.schema.name;
        emit_pair(pending, col.schema.name + " = 1", col.schema.name + " = 0",
                  prov, vals);
        break;
      }
      case ColumnType::Categorical: {
        std::set<std::string> values(col.text.begin(), col.text.end());
        for (const auto& v : values) {
          std::vector<std::uint8_t> vals(table.rows);
          for (std::size_t i = 0; i < table.rows; ++i)
            vals[i] = col.text[i] == v ? 1 : 0;
          FeatureProvenance prov;
          prov.kind = FeatureProvenance::Kind::Category;
          prov.source = col.schema.name;
          prov.category = v;
          emit_pair(pending, col.schema.name + " = " + v,
                    col.schema.name + " != " + v, prov, vals);
        }
        break;
      }
    }
  }

  BinaryDataset out;
  std::size_t d = pending.size();
  out.a = BinaryMatrix(table.rows, d + 1);
  out.y = table.labels;
  out.feature_names.resize(d + 1);
  out.provenance.resize(d + 1);

  out.feature_names[0] = "TRUE";
  out.provenance[0] = FeatureProvenance{};  // pad
  for (std::size_t i = 0; i < table.rows; ++i) out.a.at(i, 0) = 1;

  for (std::size_t f = 0; f < d; ++f) {
    std::size_t j = f + 1;
    out.feature_names[j] = pending[f].name;
    out.provenance[j] = pending[f].prov;
    // emit_pair appends test/negation adjacently
    out.provenance[j].negation_partner =
        static_cast<int>(f % 2 == 0 ? j + 1 : j - 1);
    for (std::size_t i = 0; i < table.rows; ++i)
      out.a.at(i, j) = pending[f].values[i];
  }
  return out;
}

BinaryDataset binarize_with_provenance(const RawTable& table,
                                       const std::vector<std::string>& feature_names,
                                       const std::vector<FeatureProvenance>& provenance) {
  if (feature_names.size() != provenance.size())
    throw std::invalid_argument("feature names and provenance differ in length");
  std::size_t width = provenance.size();
  if (width == 0) throw std::invalid_argument("empty provenance");

  auto find_column = [&](const std::string& name) -> const RawColumn& {
    for (const auto& c : table.features)
      if (c.schema.name == name) return c;
    throw std::runtime_error("schema mismatch: rule references column '" + name +
                             "' absent from input");
  };

  BinaryDataset out;
  out.a = BinaryMatrix(table.rows, width);
  out.y = table.labels;
  out.feature_names = feature_names;
  out.provenance = provenance;

  for (std::size_t j = 0; j < width; ++j) {
    const auto& prov = provenance[j];
    switch (prov.kind) {
      case FeatureProvenance::Kind::Pad:
        for (std::size_t i = 0; i < table.rows; ++i) out.a.at(i, j) = 1;
        break;
      case FeatureProvenance::Kind::Threshold: {
        const RawColumn& col = find_column(prov.source);
        if (col.numeric.size() != table.rows)
          throw std::runtime_error("column '" + prov.source + "' is not numeric");
        for (std::size_t i = 0; i < table.rows; ++i) {
          bool le = col.numeric[i] <= prov.threshold;
          out.a.at(i, j) = (le != prov.negated) ? 1 : 0;
        }
        break;
      }
      case FeatureProvenance::Kind::Binary: {
        const RawColumn& col = find_column(prov.source);
        if (col.numeric.size() != table.rows)
          throw std::runtime_error("column '" + prov.source + "' is not numeric");
        for (std::size_t i = 0; i < table.rows; ++i) {
          bool on = col.numeric[i] != 0.0;
          out.a.at(i, j) = (on != prov.negated) ? 1 : 0;
        }
        break;
      }
      case FeatureProvenance::Kind::Category: {
        const RawColumn& col = find_column(prov.source);
        if (col.text.size() != table.rows)
          throw std::runtime_error("column '" + prov.source + "' is not categorical");
        for (std::size_t i = 0; i < table.rows; ++i) {
          bool match = col.text[i] == prov.category;
          out.a.at(i, j) = (match != prov.negated) ? 1 : 0;
        }
        break;
      }
    }
  }
  return out;
}

FoldPlan stratified_folds(std::span<const std::uint8_t> y, int k, std::uint64_t seed) {
  std::size_t n = y.size();
  if (k < 2) throw std::invalid_argument("fold count must be >= 2");
  if (static_cast<std::size_t>(k) > n)
    throw std::invalid_argument("fold count exceeds sample count");

  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < n; ++i) (y[i] ? pos : neg).push_back(i);
  if (pos.empty() || neg.empty())
    std::cerr << "warning: single-class labels; folds cannot be stratified\n";

  std::mt19937_64 rng(seed);
  auto shuffle_indices = [&](std::vector<std::size_t>& v) {
    // hand-rolled Fisher-Yates for cross-platform determinism
    for (std::size_t j = v.size(); j > 1; --j)
      std::swap(v[j - 1], v[rng() % j]);
  };
  shuffle_indices(pos);
  shuffle_indices(neg);

  FoldPlan plan;
  plan.k = k;
  plan.assignment.assign(n, 0);
  std::size_t cursor = 0;
  for (std::size_t i : pos) plan.assignment[i] = static_cast<int>(cursor++ % k);
  for (std::size_t i : neg) plan.assignment[i] = static_cast<int>(cursor++ % k);
  return plan;
}

BinaryDataset subset(const BinaryDataset& data, std::span<const std::size_t> indices) {
  std::unordered_set<std::size_t> seen;
  for (std::size_t i : indices) {
    if (i >= data.num_samples())
      throw std::out_of_range("subset index " + std::to_string(i) + " out of range");
    if (!seen.insert(i).second)
      throw std::invalid_argument("duplicate subset index " + std::to_string(i));
  }
  BinaryDataset out;
  out.a = BinaryMatrix(indices.size(), data.num_features());
  out.y.resize(indices.size());
  out.feature_names = data.feature_names;
  out.provenance = data.provenance;
  for (std::size_t r = 0; r < indices.size(); ++r) {
    auto src = data.a.row(indices[r]);
    std::copy(src.begin(), src.end(), out.a.row(r).begin());
    out.y[r] = data.y[indices[r]];
  }
  return out;
}

RawTable subset(const RawTable& table, std::span<const std::size_t> indices) {
  std::unordered_set<std::size_t> seen;
  for (std::size_t i : indices) {
    if (i >= table.rows)
      throw std::out_of_range("subset index " + std::to_string(i) + " out of range");
    if (!seen.insert(i).second)
      throw std::invalid_argument("duplicate subset index " + std::to_string(i));
  }
  RawTable out;
  out.rows = indices.size();
  out.label_schema = table.label_schema;
  out.features.reserve(table.features.size());
  for (const RawColumn& col : table.features) {
    RawColumn sub;
    sub.schema = col.schema;
    for (std::size_t i : indices) {
      if (!col.numeric.empty()) sub.numeric.push_back(col.numeric[i]);
      if (!col.text.empty()) sub.text.push_back(col.text[i]);
    }
    out.features.push_back(std::move(sub));
  }
  if (!table.labels.empty())
    for (std::size_t i : indices) out.labels.push_back(table.labels[i]);
  return out;
}

}  // namespace ruleopt
