#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mcate/dataset.hpp"
#include "mcate/design.hpp"
#include "mcate/error.hpp"
#include "support.hpp"

#include <functional>

using namespace mcate;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an mcate::Error");
  return ErrorKind::usage;
}

CsvSchema xy_schema() {
  CsvSchema s;
  s.covariate_cols = {"x"};
  return s;
}

}  // namespace

TEST_CASE("centers are relabeled by first appearance") {
  const std::string csv = "center,arm,outcome,x\n7,0,1.5,0.1\n7,1,2.5,0.2\n3,0,3.5,0.3\n3,1,4.5,0.4\n";
  const auto d = parse_csv(csv, xy_schema());
  CHECK(d.m() == 2);
  CHECK(d.center == (Eigen::VectorXi(4) << 1, 1, 2, 2).finished());
  CHECK(d.center_labels == std::vector<std::string>{"7", "3"});
  CHECK(d.arms() == std::vector<int>{0, 1});
  CHECK(d.center_size(2) == 2);
  CHECK(d.outcome(2) == 3.5);
}

TEST_CASE("string center labels and column order") {
  const std::string csv = "x,site,y,t\n1,Boston,10,1\n2,Denver,20,0\n3,Boston,30,0\n4,Denver,40,1\n";
  CsvSchema s;
  s.center_col = "site";
  s.outcome_col = "y";
  s.arm_col = "t";
  const auto d = parse_csv(csv, s);
  CHECK(d.covariate_names == std::vector<std::string>{"x"});
  CHECK(d.center_labels == std::vector<std::string>{"Boston", "Denver"});
  CHECK(d.center == (Eigen::VectorXi(4) << 1, 2, 1, 2).finished());
}

TEST_CASE("CSV write and read round trip is bit exact") {
  std::mt19937_64 rng(11);
  auto d = testing::random_trial(rng, 4, 60, 3);
  d.outcome(0) = 0.1 + 0.2;
  d.covariates(1, 1) = 1e-300;
  CsvSchema s;
  const auto back = parse_csv(format_csv(d, s), s);
  CHECK(back.covariates == d.covariates);
  CHECK(back.outcome == d.outcome);
  CHECK(back.arm == d.arm);
  CHECK(back.center == d.center);
  CHECK(back.center_labels == d.center_labels);
  CHECK(back.covariate_names == d.covariate_names);
}

TEST_CASE("quoted cells, CRLF and a byte order mark are accepted") {
  const std::string csv = "\xEF\xBB\xBF" "center,arm,outcome,x\r\n\"a,b\",0,1,2\r\n\"a,b\",1,3,4\r\n";
  const auto d = parse_csv(csv, xy_schema());
  CHECK(d.center_labels == std::vector<std::string>{"a,b"});
  CHECK(d.n() == 2);
}

TEST_CASE("malformed input is classified") {
  const auto s = xy_schema();
  CHECK(kind_of([&] { parse_csv("", s); }) == ErrorKind::empty_input);
  CHECK(kind_of([&] { parse_csv("center,arm,outcome,x\n", s); }) == ErrorKind::empty_input);
  CHECK(kind_of([&] { parse_csv("center,arm,y,x\n1,0,1,1\n", s); }) == ErrorKind::schema);
  CHECK(kind_of([&] { parse_csv("center,arm,outcome,x\n1,0,1,abc\n", s); }) == ErrorKind::parse);
  CHECK(kind_of([&] { parse_csv("center,arm,outcome,x\n1,0.5,1,1\n", s); }) == ErrorKind::parse);
  CHECK(kind_of([&] { parse_csv("center,arm,outcome,x\n1,0,1\n", s); }) == ErrorKind::parse);
  CHECK(kind_of([&] { parse_csv("center,arm,outcome,x\n1,0,1,1,5\n", s); }) == ErrorKind::parse);
  CHECK(kind_of([&] { parse_csv("center,arm,outcome,x\n1,0,1,1e\n", s); }) == ErrorKind::parse);
  CHECK(kind_of([&] { parse_csv("center,arm,outcome,x\n1,0,NA,1\n", s); }) == ErrorKind::parse);
  CHECK(kind_of([&] { load_csv("/nonexistent/file.csv", s); }) == ErrorKind::usage);
}

TEST_CASE("listwise deletion of incomplete rows") {
  auto s = xy_schema();
  s.drop_incomplete_rows = true;
  const auto d = parse_csv("center,arm,outcome,x\n1,0,1,1\n1,1,NA,2\n2,0,3,\n2,1,4,4\n", s);
  CHECK(d.n() == 2);
  CHECK(d.dropped_rows == 2);
  CHECK(kind_of([&] { parse_csv("center,arm,outcome,x\n1,0,NA,1\n", s); }) == ErrorKind::empty_input);
}

TEST_CASE("positivity lists empty cells") {
  const std::string csv = "center,arm,outcome,x\n1,0,1,1\n1,1,2,2\n2,0,3,3\n";
  const auto d = parse_csv(csv, xy_schema());
  const auto counts = count_cells(d);
  CHECK(counts.counts(0, 0) == 1);
  CHECK(counts.counts(1, 1) == 0);
  CHECK(counts.center_sizes(1) == 1);
  CHECK(kind_of([&] { validate_positivity(d); }) == ErrorKind::positivity);
}

TEST_CASE("make_dataset rejects inconsistent columns") {
  CHECK(kind_of([] {
          make_dataset(Eigen::MatrixXd::Zero(3, 1), {"x"}, Eigen::VectorXi::Ones(2), Eigen::VectorXi::Zero(3),
                       Eigen::VectorXd::Zero(3));
        }) == ErrorKind::shape);
  CHECK(kind_of([] {
          make_dataset(Eigen::MatrixXd::Zero(3, 2), {"x"}, Eigen::VectorXi::Ones(3), Eigen::VectorXi::Zero(3),
                       Eigen::VectorXd::Zero(3));
        }) == ErrorKind::shape);
}

TEST_CASE("select_rows keeps center numbering") {
  std::mt19937_64 rng(3);
  const auto d = testing::random_trial(rng, 3, 30);
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < d.n(); ++i)
    if (d.center(i) != 2) rows.push_back(i);
  rows.push_back(rows.front());
  const auto s = select_rows(d, rows);
  CHECK(s.m() == 3);
  CHECK(s.center_size(2) == 0);
  CHECK(s.n() == static_cast<Eigen::Index>(rows.size()));
  CHECK(s.outcome(s.n() - 1) == d.outcome(rows.front()));
  CHECK(kind_of([&] { select_rows(d, {d.n()}); }) == ErrorKind::shape);
}

TEST_CASE("design expansion") {
  const auto d = make_dataset((Eigen::MatrixXd(4, 1) << 1, 2, 3, 4).finished(), {"x"},
                              (Eigen::VectorXi(4) << 5, 5, 6, 7).finished(),
                              (Eigen::VectorXi(4) << 0, 1, 0, 1).finished(), Eigen::VectorXd::Zero(4));
  const auto spec = DesignSpec::parse({"1", "x", "C", "A", "x:A", "A:C"});
  CHECK(spec.to_strings() == std::vector<std::string>{"1", "x", "C", "A", "x:A", "A:C"});
  CHECK(DesignSpec::parse(spec.to_strings()) == spec);
  const auto design = build_design(spec, d);
  REQUIRE(design.matrix.cols() == 1 + 1 + 2 + 1 + 1 + 2);
  Eigen::MatrixXd expected(4, 8);
  expected << 1, 1, 0, 0, 0, 0, 0, 0,
              1, 2, 0, 0, 1, 2, 0, 0,
              1, 3, 1, 0, 0, 0, 0, 0,
              1, 4, 0, 1, 1, 4, 0, 1;
  CHECK(design.matrix == expected);

  const auto treated = build_design(main_effects({"x"}, true), d, 1);
  CHECK(treated.rows == std::vector<Eigen::Index>{1, 3});
  CHECK(treated.matrix.rows() == 2);

  CHECK(kind_of([&] { build_design(DesignSpec::parse({"1", "z"}), d); }) == ErrorKind::spec);
}
