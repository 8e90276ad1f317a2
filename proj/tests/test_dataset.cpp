#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "ruleopt/dataset.hpp"

using namespace ruleopt;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  std::string path = "dataset_test_" + name;
  std::ofstream out(path, std::ios::binary);
  out << content;
  return path;
}

TableSchema toy_schema() {
  TableSchema s;
  s.columns = {{"a", ColumnType::Continuous},
               {"b", ColumnType::Binary},
               {"c", ColumnType::Categorical}};
  s.label = {"y", "1"};
  return s;
}

}  // namespace

TEST_CASE("csv parser handles quoting, CRLF, and blank lines") {
  std::string path = write_temp("quotes.csv",
                                "a,b,\"c x\"\r\n"
                                "1,\"two, three\",\"say \"\"hi\"\"\"\r\n"
                                "\n"
                                "4,five,six\n");
  CsvFile csv = read_csv_file(path);
  REQUIRE(csv.header.size() == 3);
  CHECK(csv.header[2] == "c x");
  REQUIRE(csv.rows.size() == 2);
  CHECK(csv.rows[0][1] == "two, three");
  CHECK(csv.rows[0][2] == "say \"hi\"");
  CHECK(csv.rows[1][0] == "4");
  std::remove(path.c_str());
}

TEST_CASE("csv parser rejects ragged rows and unterminated quotes") {
  std::string ragged = write_temp("ragged.csv", "a,b\n1,2\n3\n");
  CHECK_THROWS_AS(read_csv_file(ragged), std::runtime_error);
  std::remove(ragged.c_str());

  std::string unterminated = write_temp("unterminated.csv", "a,b\n\"oops,2\n");
  CHECK_THROWS_AS(read_csv_file(unterminated), std::runtime_error);
  std::remove(unterminated.c_str());
}

TEST_CASE("load_csv types columns and maps labels") {
  std::string path = write_temp("typed.csv",
                                "a,b,c,y\n"
                                "1.5,1,red,1\n"
                                "2.5,0,blue,0\n"
                                "3.5,1,red,0\n");
  RawTable table = load_csv(path, toy_schema());
  CHECK(table.rows == 3);
  CHECK(table.features[0].numeric == std::vector<double>{1.5, 2.5, 3.5});
  CHECK(table.features[1].numeric == std::vector<double>{1, 0, 1});
  CHECK(table.features[2].text == std::vector<std::string>{"red", "blue", "red"});
  CHECK(table.labels == std::vector<std::uint8_t>{1, 0, 0});
  std::remove(path.c_str());
}

TEST_CASE("load_csv rejects bad cells") {
  SUBCASE("missing value") {
    std::string path = write_temp("missing.csv", "a,b,c,y\n1.5,,red,1\n2,0,blue,0\n");
    CHECK_THROWS_WITH_AS(load_csv(path, toy_schema()),
                         doctest::Contains("missing value"), std::runtime_error);
    std::remove(path.c_str());
  }
  SUBCASE("non-binary cell in a binary column") {
    std::string path = write_temp("nonbin.csv", "a,b,c,y\n1.5,2,red,1\n2,0,blue,0\n");
    CHECK_THROWS_AS(load_csv(path, toy_schema()), std::runtime_error);
    std::remove(path.c_str());
  }
  SUBCASE("third label value") {
    std::string path = write_temp("label3.csv",
                                  "a,b,c,y\n1,1,red,1\n2,0,blue,0\n3,1,red,2\n");
    CHECK_THROWS_WITH_AS(load_csv(path, toy_schema()),
                         doctest::Contains("label"), std::runtime_error);
    std::remove(path.c_str());
  }
  SUBCASE("schema column absent") {
    std::string path = write_temp("absent.csv", "a,b,y\n1,1,1\n");
    CHECK_THROWS_AS(load_csv(path, toy_schema()), std::runtime_error);
    std::remove(path.c_str());
  }
}

TEST_CASE("quantile interpolates linearly between order statistics") {
  std::vector<double> v;
  for (int i = 1; i <= 100; ++i) v.push_back(i);
  CHECK(quantile(v, 0.25) == doctest::Approx(25.75).epsilon(1e-12));
  CHECK(quantile(v, 0.5) == doctest::Approx(50.5).epsilon(1e-12));
  CHECK(quantile(v, 0.75) == doctest::Approx(75.25).epsilon(1e-12));
  CHECK(quantile(v, 0.0) == 1.0);
  CHECK(quantile(v, 1.0) == 100.0);
  std::vector<double> single{7.0};
  CHECK(quantile(single, 0.3) == 7.0);
}

TEST_CASE("binarize emits pad, threshold pairs, and negation partners") {
  RawTable table;
  table.rows = 4;
  table.label_schema = {"y", "1"};
  RawColumn cont;
  cont.schema = {"t", ColumnType::Continuous};
  cont.numeric = {1.0, 2.0, 3.0, 4.0};
  table.features.push_back(cont);
  table.labels = {1, 0, 1, 0};

  BinaryDataset data = binarize(table, 1);  // single median threshold
  REQUIRE(data.num_features() == 3);        // pad + (t <= med, t > med)
  CHECK(data.feature_names[0] == "TRUE");
  CHECK(data.provenance[0].kind == FeatureProvenance::Kind::Pad);
  CHECK(data.provenance[1].kind == FeatureProvenance::Kind::Threshold);
  CHECK(data.provenance[1].negation_partner == 2);
  CHECK(data.provenance[2].negation_partner == 1);
  CHECK(data.provenance[1].negated != data.provenance[2].negated);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(data.a.at(i, 0) == 1);
    CHECK(data.a.at(i, 1) + data.a.at(i, 2) == 1);  // complementary pair
  }
  CHECK(data.y == std::vector<std::uint8_t>{1, 0, 1, 0});
}

TEST_CASE("binarize drops constant columns and expands categories") {
  RawTable table;
  table.rows = 3;
  RawColumn constant;
  constant.schema = {"k", ColumnType::Continuous};
  constant.numeric = {5, 5, 5};
  RawColumn cat;
  cat.schema = {"c", ColumnType::Categorical};
  cat.text = {"red", "blue", "red"};
  table.features = {constant, cat};
  table.labels = {1, 0, 1};

  BinaryDataset data = binarize(table, 3);
  // pad + 2 categories x (indicator, negation); the constant column vanishes
  REQUIRE(data.num_features() == 5);
  for (std::size_t j = 1; j < 5; ++j) {
    CHECK(data.provenance[j].kind == FeatureProvenance::Kind::Category);
    CHECK(data.provenance[j].source == "c");
  }
  std::set<std::string> cats;
  for (std::size_t j = 1; j < 5; ++j) cats.insert(data.provenance[j].category);
  CHECK(cats == std::set<std::string>{"red", "blue"});
}

TEST_CASE("binarize_with_provenance reapplies stored thresholds") {
  RawTable table;
  table.rows = 6;
  RawColumn cont;
  cont.schema = {"t", ColumnType::Continuous};
  cont.numeric = {1, 2, 3, 4, 5, 6};
  table.features.push_back(cont);
  table.labels = {0, 0, 0, 1, 1, 1};

  BinaryDataset train = binarize(table, 3);

  RawTable fresh;
  fresh.rows = 2;
  RawColumn col;
  col.schema = {"t", ColumnType::Continuous};
  col.numeric = {0.0, 100.0};  // outside the training range
  fresh.features.push_back(col);

  BinaryDataset applied =
      binarize_with_provenance(fresh, train.feature_names, train.provenance);
  REQUIRE(applied.num_features() == train.num_features());
  for (std::size_t j = 1; j < applied.num_features(); ++j) {
    const auto& prov = train.provenance[j];
    std::uint8_t expect_low = prov.negated ? 0 : 1;  // "t <= thr" true at 0.0
    CHECK(applied.a.at(0, j) == expect_low);
    CHECK(applied.a.at(1, j) == (prov.negated ? 1 : 0));
  }

  RawTable wrong;
  wrong.rows = 1;
  RawColumn other;
  other.schema = {"z", ColumnType::Continuous};
  other.numeric = {1.0};
  wrong.features.push_back(other);
  CHECK_THROWS_WITH_AS(
      binarize_with_provenance(wrong, train.feature_names, train.provenance),
      doctest::Contains("t"), std::runtime_error);
}

TEST_CASE("stratified folds are balanced, deterministic, and seeded") {
  std::vector<std::uint8_t> y;
  for (int i = 0; i < 30; ++i) y.push_back(i < 12);

  FoldPlan p1 = stratified_folds(y, 3, 42);
  FoldPlan p2 = stratified_folds(y, 3, 42);
  CHECK(p1.assignment == p2.assignment);

  std::vector<int> pos_per_fold(3, 0), neg_per_fold(3, 0);
  for (std::size_t i = 0; i < y.size(); ++i)
    (y[i] ? pos_per_fold : neg_per_fold)[p1.assignment[i]]++;
  for (int f = 0; f < 3; ++f) {
    CHECK(pos_per_fold[f] == 4);
    CHECK(neg_per_fold[f] == 6);
  }

  FoldPlan p3 = stratified_folds(y, 3, 43);
  CHECK(p1.assignment != p3.assignment);
}

TEST_CASE("stratified folds: two samples, two folds") {
  std::vector<std::uint8_t> y{1, 0};
  FoldPlan plan = stratified_folds(y, 2, 0);
  CHECK(plan.assignment[0] != plan.assignment[1]);
  CHECK_THROWS_AS(stratified_folds(y, 1, 0), std::invalid_argument);
  CHECK_THROWS_AS(stratified_folds(y, 3, 0), std::invalid_argument);
}

TEST_CASE("subset copies rows and rejects bad indices") {
  RawTable table;
  table.rows = 4;
  RawColumn cont;
  cont.schema = {"t", ColumnType::Continuous};
  cont.numeric = {1, 2, 3, 4};
  table.features.push_back(cont);
  table.labels = {1, 0, 1, 0};
  BinaryDataset data = binarize(table, 1);

  std::vector<std::size_t> keep{3, 1};
  BinaryDataset sub = subset(data, keep);
  CHECK(sub.num_samples() == 2);
  CHECK(sub.y == std::vector<std::uint8_t>{0, 0});
  CHECK(sub.a.at(0, 1) == data.a.at(3, 1));

  RawTable rsub = subset(table, keep);
  CHECK(rsub.rows == 2);
  CHECK(rsub.features[0].numeric == std::vector<double>{4, 2});
  CHECK(rsub.labels == std::vector<std::uint8_t>{0, 0});

  std::vector<std::size_t> dup{1, 1};
  CHECK_THROWS_AS(subset(data, dup), std::invalid_argument);
  std::vector<std::size_t> oob{9};
  CHECK_THROWS_AS(subset(data, oob), std::out_of_range);
}
