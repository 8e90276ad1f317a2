#include "ruleopt/rule.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace ruleopt {

int clause_output(std::span<const std::uint8_t> a_row,
                  std::span<const std::uint8_t> w_col) {
  if (a_row.size() != w_col.size())
    throw std::invalid_argument("clause_output: length mismatch");
  for (std::size_t j = 0; j < a_row.size(); ++j)
    if (a_row[j] && w_col[j]) return 1;
  return 0;
}

namespace {

// DNF clause: AND over selected non-pad features; disabled clause yields 0,
// enabled clause with no selections is an empty AND and yields 1
int dnf_clause_output(std::span<const std::uint8_t> a_row,
                      std::span<const std::uint8_t> w_col) {
  if (w_col[0]) return 0;
  for (std::size_t j = 1; j < a_row.size(); ++j)
    if (w_col[j] && !a_row[j]) return 0;
  return 1;
}

}  // namespace

Prediction predict(const BinaryDataset& data, const RuleMatrix& rule) {
  const std::size_t n = data.num_samples();
  const std::size_t R = rule.num_clauses();
  if (rule.num_features() != data.num_features())
    throw std::invalid_argument("predict: feature dimension mismatch");

  Prediction out;
  out.clause_outputs = BinaryMatrix(n, R);
  out.labels.resize(n);

  for (std::size_t i = 0; i < n; ++i) {
    auto a_row = data.a.row(i);
    int label = rule.polarity == Polarity::CNF ? 1 : 0;
    for (std::size_t r = 0; r < R; ++r) {
      std::span<const std::uint8_t> w_col(rule.w[r]);
      int v = rule.polarity == Polarity::CNF ? clause_output(a_row, w_col)
                                             : dnf_clause_output(a_row, w_col);
      out.clause_outputs.at(i, r) = static_cast<std::uint8_t>(v);
      if (rule.polarity == Polarity::CNF)
        label &= v;
      else
        label |= v;
    }
    out.labels[i] = static_cast<std::uint8_t>(label);
  }
  return out;
}

std::size_t sparsity(const RuleMatrix& rule) {
  std::size_t total = 0;
  for (std::size_t r = 0; r < rule.num_clauses(); ++r) {
    if (rule.clause_disabled(r)) continue;
    for (std::size_t j = 1; j < rule.w[r].size(); ++j) total += rule.w[r][j];
  }
  return total;
}

RuleMatrix demorgan_dual(const RuleMatrix& rule, const std::vector<int>& negation_map) {
  RuleMatrix dual = rule;
  dual.polarity = rule.polarity == Polarity::CNF ? Polarity::DNF : Polarity::CNF;
  for (std::size_t r = 0; r < rule.num_clauses(); ++r) {
    const auto& col = rule.w[r];
    auto& dcol = dual.w[r];
    std::fill(dcol.begin() + 1, dcol.end(), 0);
    for (std::size_t j = 1; j < col.size(); ++j) {
      if (!col[j]) continue;
      if (j >= negation_map.size() || negation_map[j] < 0 ||
          static_cast<std::size_t>(negation_map[j]) >= col.size())
        throw std::invalid_argument("demorgan_dual: feature " + std::to_string(j) +
                                    " has no negation partner");
      dcol[static_cast<std::size_t>(negation_map[j])] = 1;
    }
  }
  return dual;
}

namespace {

bool rule_is_empty(const RuleMatrix& rule) {
  for (std::size_t r = 0; r < rule.num_clauses(); ++r)
    if (!rule.clause_disabled(r)) return false;
  return true;
}

std::string condition_text(const RuleMatrix& rule, std::size_t j) {
  if (j < rule.feature_names.size() && !rule.feature_names[j].empty())
    return rule.feature_names[j];
  return "x" + std::to_string(j);
}

}  // namespace

std::string format_rule(const RuleMatrix& rule) {
  const bool dnf = rule.polarity == Polarity::DNF;
  if (rule_is_empty(rule))
    return dnf ? "IF never THEN positive.\n" : "IF always THEN positive.\n";

  const char* inner = dnf ? "AND" : "OR";
  const char* outer = dnf ? "OR" : "AND";

  std::vector<std::vector<std::string>> branches;
  for (std::size_t r = 0; r < rule.num_clauses(); ++r) {
    if (rule.clause_disabled(r)) continue;
    std::vector<std::string> conds;
    for (std::size_t j = 1; j < rule.w[r].size(); ++j)
      if (rule.w[r][j]) conds.push_back(condition_text(rule, j));
    if (conds.empty()) conds.push_back(dnf ? "always" : "never");
    branches.push_back(std::move(conds));
  }

  std::ostringstream out;
  out << "IF\n";
  for (std::size_t b = 0; b < branches.size(); ++b) {
    const auto& conds = branches[b];
    for (std::size_t c = 0; c < conds.size(); ++c) {
      if (c == 0)
        out << "  " << (b + 1) << ". ";
      else
        out << "     ";
      out << conds[c] << ";";
      if (c + 1 < conds.size())
        out << " " << inner;
      else if (b + 1 < branches.size())
        out << " " << outer;
      out << "\n";
    }
  }
  out << "THEN positive.\n";
  return out.str();
}

namespace {

using nlohmann::json;

json provenance_to_json(const FeatureProvenance& p) {
  json j;
  switch (p.kind) {
    case FeatureProvenance::Kind::Pad: j["kind"] = "pad"; break;
    case FeatureProvenance::Kind::Threshold: j["kind"] = "threshold"; break;
    case FeatureProvenance::Kind::Binary: j["kind"] = "binary"; break;
    case FeatureProvenance::Kind::Category: j["kind"] = "category"; break;
  }
  j["source"] = p.source;
  if (p.kind == FeatureProvenance::Kind::Threshold) j["threshold"] = p.threshold;
  if (p.kind == FeatureProvenance::Kind::Category) j["category"] = p.category;
  j["negated"] = p.negated;
  j["negation_partner"] = p.negation_partner;
  return j;
}

FeatureProvenance provenance_from_json(const json& j) {
  FeatureProvenance p;
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "pad")
    p.kind = FeatureProvenance::Kind::Pad;
  else if (kind == "threshold")
    p.kind = FeatureProvenance::Kind::Threshold;
  else if (kind == "binary")
    p.kind = FeatureProvenance::Kind::Binary;
  else if (kind == "category")
    p.kind = FeatureProvenance::Kind::Category;
  else
    throw std::runtime_error("rule file: unknown provenance kind '" + kind + "'");
  p.source = j.at("source").get<std::string>();
  if (j.contains("threshold")) p.threshold = j["threshold"].get<double>();
  if (j.contains("category")) p.category = j["category"].get<std::string>();
  p.negated = j.at("negated").get<bool>();
  p.negation_partner = j.at("negation_partner").get<int>();
  return p;
}

}  // namespace

void save_rule(const RuleMatrix& rule, const std::string& path) {
  json doc;
  doc["version"] = 1;
  doc["polarity"] = rule.polarity == Polarity::CNF ? "cnf" : "dnf";
  doc["feature_names"] = rule.feature_names;
  json w = json::array();
  for (const auto& col : rule.w) {
    json c = json::array();
    for (auto v : col) c.push_back(static_cast<int>(v));
    w.push_back(std::move(c));
  }
  doc["w"] = std::move(w);
  json prov = json::array();
  for (const auto& p : rule.provenance) prov.push_back(provenance_to_json(p));
  doc["provenance"] = std::move(prov);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write rule file: " + path);
  out << doc.dump(2) << "\n";
}

RuleMatrix load_rule(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open rule file: " + path);
  json doc = json::parse(in);

  int version = doc.at("version").get<int>();
  if (version != 1)
    throw std::runtime_error("rule file: unsupported version " +
                             std::to_string(version));

  RuleMatrix rule;
  std::string pol = doc.at("polarity").get<std::string>();
  if (pol == "cnf")
    rule.polarity = Polarity::CNF;
  else if (pol == "dnf")
    rule.polarity = Polarity::DNF;
  else
    throw std::runtime_error("rule file: unknown polarity '" + pol + "'");

  rule.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
  for (const auto& col : doc.at("w")) {
    std::vector<std::uint8_t> c;
    for (const auto& v : col) {
      int bit = v.get<int>();
      if (bit != 0 && bit != 1)
        throw std::runtime_error("rule file: non-binary weight");
      c.push_back(static_cast<std::uint8_t>(bit));
    }
    rule.w.push_back(std::move(c));
  }
  if (rule.w.empty()) throw std::runtime_error("rule file: no clauses");
  for (const auto& c : rule.w)
    if (c.size() != rule.w[0].size())
      throw std::runtime_error("rule file: ragged weight matrix");
  for (const auto& p : doc.at("provenance"))
    rule.provenance.push_back(provenance_from_json(p));
  if (rule.provenance.size() != rule.w[0].size())
    throw std::runtime_error("rule file: provenance length mismatch");
  return rule;
}

}  // namespace ruleopt
