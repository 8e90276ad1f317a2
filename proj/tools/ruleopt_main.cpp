#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ruleopt/dataset.hpp"
#include "ruleopt/evaluation.hpp"
#include "ruleopt/rule.hpp"
#include "ruleopt/two_level.hpp"

namespace {

using ruleopt::Algorithm;
using ruleopt::BinaryDataset;
using ruleopt::ColumnSchema;
using ruleopt::ColumnType;
using ruleopt::CvConfig;
using ruleopt::CVReport;
using ruleopt::FeatureProvenance;
using ruleopt::LearnerConfig;
using ruleopt::Polarity;
using ruleopt::RawColumn;
using ruleopt::RawTable;
using ruleopt::RuleMatrix;
using ruleopt::TableSchema;
using ruleopt::ThetaGrid;

// runtime failure tagged with the stage that produced it (parse | binarize |
// fit | write), so the exit-1 message names where things went wrong
struct StageError : std::runtime_error {
  StageError(const std::string& stage, const std::string& what)
      : std::runtime_error("error (" + stage + "): " + what) {}
};

template <typename Fn>
auto stage(const std::string& name, Fn&& fn) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

ColumnType parse_column_type(const std::string& s) {
  if (s == "continuous") return ColumnType::Continuous;
  if (s == "binary") return ColumnType::Binary;
  if (s == "categorical") return ColumnType::Categorical;
  throw std::runtime_error("unknown column type: " + s);
}

TableSchema schema_from_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open schema file: " + path);
  nlohmann::json j;
  in >> j;

  TableSchema schema;
  schema.label.column = j.at("label").at("column").get<std::string>();
  schema.label.positive_value = j.at("label").at("positive_value").get<std::string>();
  for (const auto& jc : j.at("columns")) {
    ColumnSchema col;
    col.name = jc.at("name").get<std::string>();
    col.type = parse_column_type(jc.at("type").get<std::string>());
    schema.columns.push_back(col);
  }
  if (schema.columns.empty()) throw std::runtime_error("schema has no columns");
  return schema;
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(part);
  return out;
}

// columns declared inline on the command line instead of a schema file
struct InlineSchema {
  std::string label_column;
  std::string positive_value = "1";
  std::string continuous, binary, categorical;
};

TableSchema resolve_schema(const std::string& schema_path, const InlineSchema& inl) {
  if (!schema_path.empty()) {
    if (!inl.label_column.empty() || !inl.continuous.empty() ||
        !inl.binary.empty() || !inl.categorical.empty())
      throw std::runtime_error("--schema conflicts with inline schema flags");
    return schema_from_json(schema_path);
  }
  if (inl.label_column.empty())
    throw std::runtime_error("need --schema or --label plus column lists");

  TableSchema schema;
  schema.label.column = inl.label_column;
  schema.label.positive_value = inl.positive_value;
  for (const auto& name : split_list(inl.continuous))
    schema.columns.push_back({name, ColumnType::Continuous});
  for (const auto& name : split_list(inl.binary))
    schema.columns.push_back({name, ColumnType::Binary});
  for (const auto& name : split_list(inl.categorical))
    schema.columns.push_back({name, ColumnType::Categorical});
  if (schema.columns.empty())
    throw std::runtime_error("inline schema declares no feature columns");
  return schema;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

Algorithm parse_algorithm(const std::string& s) {
  if (s == "bcd") return Algorithm::BCD;
  if (s == "am") return Algorithm::AM;
  if (s == "sc") return Algorithm::SC;
  if (s == "ocrl") return Algorithm::OCRL;
  throw std::runtime_error("unknown algorithm: " + s);
}

Polarity parse_polarity(const std::string& s) {
  if (s == "cnf") return Polarity::CNF;
  if (s == "dnf") return Polarity::DNF;
  throw std::runtime_error("unknown polarity: " + s);
}

std::string trace_json(const ruleopt::FitTrace& trace) {
  nlohmann::json j;
  j["objectives"] = trace.objectives;
  j["raw_objectives"] = trace.raw_objectives;
  j["accepted_clause"] = trace.accepted_clause;
  j["stop_reason"] = trace.stop_reason;
  return j.dump(2) + "\n";
}

// rebuilds just the raw columns a stored rule needs, typed by provenance
RawTable table_for_rule(const ruleopt::CsvFile& csv, const RuleMatrix& rule) {
  RawTable table;
  table.rows = csv.rows.size();

  auto have_column = [&](const std::string& name) {
    for (const auto& col : table.features)
      if (col.schema.name == name) return true;
    return false;
  };
  auto header_index = [&](const std::string& name) {
    for (std::size_t j = 0; j < csv.header.size(); ++j)
      if (csv.header[j] == name) return j;
    throw std::runtime_error("rule references a column absent from input: " + name);
  };

  for (const FeatureProvenance& prov : rule.provenance) {
    if (prov.kind == FeatureProvenance::Kind::Pad) continue;
    if (have_column(prov.source)) continue;
    std::size_t j = header_index(prov.source);

    RawColumn col;
    col.schema.name = prov.source;
    if (prov.kind == FeatureProvenance::Kind::Category) {
      col.schema.type = ColumnType::Categorical;
      for (const auto& row : csv.rows) col.text.push_back(row[j]);
    } else {
      col.schema.type = prov.kind == FeatureProvenance::Kind::Binary
                            ? ColumnType::Binary
                            : ColumnType::Continuous;
      for (std::size_t i = 0; i < csv.rows.size(); ++i) {
        const std::string& cell = csv.rows[i][j];
        try {
          std::size_t used = 0;
          double v = std::stod(cell, &used);
          if (used != cell.size()) throw std::invalid_argument(cell);
          col.numeric.push_back(v);
        } catch (const std::exception&) {
          throw std::runtime_error("non-numeric cell '" + cell + "' at row " +
                                   std::to_string(i + 1) + ", column " + prov.source);
        }
      }
    }
    table.features.push_back(std::move(col));
  }
  return table;
}

int cmd_binarize(const std::string& input, const std::string& schema_path,
                 const InlineSchema& inl, int thresholds,
                 const std::string& output, const std::string& features_out) {
  TableSchema schema = stage("parse", [&] { return resolve_schema(schema_path, inl); });
  RawTable table = stage("parse", [&] { return ruleopt::load_csv(input, schema); });
  BinaryDataset data =
      stage("binarize", [&] { return ruleopt::binarize(table, thresholds); });

  stage("write", [&] {
    std::ostringstream out;
    for (std::size_t j = 1; j < data.feature_names.size(); ++j)
      out << '"' << data.feature_names[j] << "\",";
    out << "label\n";
    for (std::size_t i = 0; i < data.num_samples(); ++i) {
      for (std::size_t j = 1; j < data.num_features(); ++j)
        out << int(data.a.at(i, j)) << ',';
      out << int(data.y[i]) << '\n';
    }
    write_file(output, out.str());

    if (!features_out.empty()) {
      nlohmann::json j = nlohmann::json::array();
      for (std::size_t f = 0; f < data.feature_names.size(); ++f) {
        const FeatureProvenance& prov = data.provenance[f];
        nlohmann::json jf;
        jf["name"] = data.feature_names[f];
        jf["source"] = prov.source;
        jf["threshold"] = prov.threshold;
        jf["category"] = prov.category;
        jf["negated"] = prov.negated;
        jf["negation_partner"] = prov.negation_partner;
        j.push_back(jf);
      }
      write_file(features_out, j.dump(2) + "\n");
    }
    return 0;
  });

  std::cout << data.num_samples() << " rows, " << (data.num_features() - 1)
            << " binary features (pad excluded)\n";
  return 0;
}

int cmd_train(const std::string& input, const std::string& schema_path,
              const InlineSchema& inl, const LearnerConfig& cfg, int thresholds,
              const std::string& rule_out, const std::string& trace_out) {
  TableSchema schema = stage("parse", [&] { return resolve_schema(schema_path, inl); });
  RawTable table = stage("parse", [&] { return ruleopt::load_csv(input, schema); });
  BinaryDataset data =
      stage("binarize", [&] { return ruleopt::binarize(table, thresholds); });

  auto [rule, trace] = stage("fit", [&] { return ruleopt::fit(data, cfg); });

  stage("write", [&] {
    if (!rule_out.empty()) ruleopt::save_rule(rule, rule_out);
    if (!trace_out.empty()) write_file(trace_out, trace_json(trace));
    return 0;
  });

  std::cout << ruleopt::format_rule(rule);
  std::cerr << "objective " << trace.objectives.back() << " after "
            << trace.objectives.size() - 1 << " iterations ("
            << trace.stop_reason << "), sparsity " << ruleopt::sparsity(rule)
            << "\n";
  return 0;
}

int cmd_predict(const std::string& input, const std::string& rule_path,
                const std::string& output) {
  RuleMatrix rule = stage("parse", [&] { return ruleopt::load_rule(rule_path); });
  ruleopt::CsvFile csv = stage("parse", [&] { return ruleopt::read_csv_file(input); });
  if (csv.rows.empty()) {
    std::cerr << "error (parse): empty table: " << input << "\n";
    return 1;
  }

  BinaryDataset data = stage("binarize", [&] {
    RawTable table = table_for_rule(csv, rule);
    return ruleopt::binarize_with_provenance(table, rule.feature_names,
                                             rule.provenance);
  });
  ruleopt::Prediction pred = stage("fit", [&] { return ruleopt::predict(data, rule); });

  stage("write", [&] {
    std::ostringstream out;
    out << "prediction\n";
    for (std::uint8_t p : pred.labels) out << int(p) << '\n';
    write_file(output, out.str());
    return 0;
  });

  std::cout << pred.labels.size() << " predictions written to " << output << "\n";
  return 0;
}

int cmd_cv(const std::string& input, const std::string& schema_path,
           const InlineSchema& inl, const CvConfig& cfg, const std::string& name,
           const std::string& report_out, const std::string& table_out) {
  TableSchema schema = stage("parse", [&] { return resolve_schema(schema_path, inl); });
  RawTable table = stage("parse", [&] { return ruleopt::load_csv(input, schema); });

  CVReport report = stage("fit", [&] { return ruleopt::cross_validate(table, cfg); });

  std::string text = ruleopt::report_table(name, report);
  stage("write", [&] {
    if (!report_out.empty()) write_file(report_out, ruleopt::report_json(report));
    if (!table_out.empty()) write_file(table_out, text);
    return 0;
  });

  std::cout << text;
  return 0;
}

void add_schema_flags(CLI::App* cmd, std::string& schema_path, InlineSchema& inl) {
  cmd->add_option("--schema", schema_path, "schema JSON file");
  cmd->add_option("--label", inl.label_column, "label column name (inline schema)");
  cmd->add_option("--positive", inl.positive_value,
                  "label value treated as positive (default 1)");
  cmd->add_option("--continuous", inl.continuous, "comma list of continuous columns");
  cmd->add_option("--binary", inl.binary, "comma list of 0/1 columns");
  cmd->add_option("--categorical", inl.categorical, "comma list of categorical columns");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-level Boolean rule learner"};
  app.require_subcommand(1);

  std::string input, schema_path, output, features_out, rule_path, trace_out;
  std::string report_out, table_out, name = "dataset";
  std::string algorithm = "bcd", polarity = "dnf", grid_spec, order = "greedy";
  InlineSchema inl;
  int thresholds = 9, r = 5, k = 10, inner_k = 5, max_iters = 100, jobs = 1;
  double theta = 0.0, pad_cost = 0.0;
  std::uint64_t seed = 0;

  auto* bin = app.add_subcommand("binarize", "quantile-binarize a CSV");
  bin->add_option("--input", input, "input CSV")->required();
  add_schema_flags(bin, schema_path, inl);
  bin->add_option("--thresholds", thresholds, "quantile thresholds per column")
      ->check(CLI::Range(1, 1000));
  bin->add_option("--output", output, "binarized CSV path")->required();
  bin->add_option("--features", features_out, "feature provenance JSON path");

  auto* train = app.add_subcommand("train", "fit a rule and print it");
  train->add_option("--input", input, "input CSV")->required();
  add_schema_flags(train, schema_path, inl);
  train->add_option("--algorithm", algorithm, "bcd | am | sc | ocrl")
      ->check(CLI::IsMember({"bcd", "am", "sc", "ocrl"}));
  train->add_option("--polarity", polarity, "cnf | dnf (default dnf)")
      ->check(CLI::IsMember({"cnf", "dnf"}));
  train->add_option("--order", order, "bcd clause order: greedy | cyclic | random")
      ->check(CLI::IsMember({"greedy", "cyclic", "random"}));
  train->add_option("--r", r, "clause budget")->check(CLI::Range(1, 1000));
  train->add_option("--theta", theta, "per-feature penalty")
      ->check(CLI::NonNegativeNumber);
  train->add_option("--pad-cost", pad_cost, "penalty on the pad selector")
      ->check(CLI::NonNegativeNumber);
  train->add_option("--max-iters", max_iters, "iteration cap")->check(CLI::Range(1, 1000000));
  train->add_option("--thresholds", thresholds, "quantile thresholds per column")
      ->check(CLI::Range(1, 1000));
  train->add_option("--seed", seed, "RNG seed");
  train->add_option("--jobs", jobs, "worker thread cap")->check(CLI::Range(1, 256));
  train->add_option("--rule", rule_path, "rule JSON output path");
  train->add_option("--trace", trace_out, "fit trace JSON output path");

  auto* pred = app.add_subcommand("predict", "apply a stored rule to a CSV");
  pred->add_option("--input", input, "input CSV")->required();
  pred->add_option("--rule", rule_path, "rule JSON")->required();
  pred->add_option("--output", output, "predictions CSV path")->required();

  auto* cv = app.add_subcommand("cv", "stratified cross-validation with nested tuning");
  cv->add_option("--input", input, "input CSV")->required();
  add_schema_flags(cv, schema_path, inl);
  cv->add_option("--name", name, "dataset name for the report table");
  cv->add_option("--algorithm", algorithm, "bcd | am | sc | ocrl")
      ->check(CLI::IsMember({"bcd", "am", "sc", "ocrl"}));
  cv->add_option("--polarity", polarity, "cnf | dnf (default dnf)")
      ->check(CLI::IsMember({"cnf", "dnf"}));
  cv->add_option("--r", r, "clause budget")->check(CLI::Range(1, 1000));
  cv->add_option("--k", k, "outer fold count")->check(CLI::Range(2, 1000));
  cv->add_option("--inner-k", inner_k, "tuning fold count")->check(CLI::Range(2, 1000));
  cv->add_option("--grid", grid_spec, "theta grid, lo:hi:Nlog or comma list");
  cv->add_option("--max-iters", max_iters, "iteration cap")->check(CLI::Range(1, 1000000));
  cv->add_option("--thresholds", thresholds, "quantile thresholds per column")
      ->check(CLI::Range(1, 1000));
  cv->add_option("--seed", seed, "RNG seed");
  cv->add_option("--jobs", jobs, "worker thread cap")->check(CLI::Range(1, 256));
  cv->add_option("--report", report_out, "report JSON path");
  cv->add_option("--table", table_out, "report text table path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (bin->parsed() || train->parsed() || cv->parsed()) {
    bool inline_given = !inl.label_column.empty() || !inl.continuous.empty() ||
                        !inl.binary.empty() || !inl.categorical.empty();
    if (schema_path.empty() && !inline_given) {
      std::cerr << "error: need --schema or --label plus column lists\n";
      return 2;
    }
    if (!schema_path.empty() && inline_given) {
      std::cerr << "error: --schema conflicts with inline schema flags\n";
      return 2;
    }
  }

  try {
    if (bin->parsed())
      return cmd_binarize(input, schema_path, inl, thresholds, output, features_out);

    LearnerConfig lc;
    lc.R = r;
    lc.theta = theta;
    lc.pad_cost = pad_cost;
    lc.max_iters = max_iters;
    lc.seed = seed;
    lc.jobs = jobs;
    if (train->parsed()) {
      lc.algorithm = parse_algorithm(algorithm);
      lc.polarity = parse_polarity(polarity);
      lc.order = order == "cyclic"  ? ruleopt::BcdOrder::Cyclic
                 : order == "random" ? ruleopt::BcdOrder::Random
                                     : ruleopt::BcdOrder::Greedy;
      return cmd_train(input, schema_path, inl, lc, thresholds, rule_path, trace_out);
    }
    if (pred->parsed()) return cmd_predict(input, rule_path, output);

    CvConfig cc;
    lc.algorithm = parse_algorithm(algorithm);
    lc.polarity = parse_polarity(polarity);
    cc.learner = lc;
    cc.k = k;
    cc.inner_k = inner_k;
    cc.num_thresholds = thresholds;
    cc.seed = seed;
    if (!grid_spec.empty()) cc.grid = ThetaGrid::parse(grid_spec);
    return cmd_cv(input, schema_path, inl, cc, name, report_out, table_out);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
}
