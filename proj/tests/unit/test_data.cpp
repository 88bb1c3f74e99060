#include <doctest.h>

#include <sstream>

#include "helpers.hpp"
#include "replimeta/csv.hpp"
#include "replimeta/data.hpp"

using namespace replimeta;

namespace {

ParseOptions itl_tdd() {
  ParseOptions o;
  o.levels = {"ITL", "TDD"};
  return o;
}

ReplicationSet parse(const std::string& text, const ParseOptions& o = itl_tdd()) {
  std::istringstream in(text);
  return parse_raw_dataset(in, o);
}

std::size_t error_line(const std::string& text) {
  try {
    (void)parse(text);
  } catch (const DataError& e) {
    return e.line();
  }
  return 0;
}

const std::string kHeader = "experiment_id,participant_id,treatment,outcome\n";

}  // namespace

TEST_CASE("csv reader handles quoting, blank lines and CRLF") {
  std::istringstream in("a,\"b,c\",\"say \"\"hi\"\"\"\r\n\n  x , y ,z\n");
  const auto recs = csv::read(in);
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].fields == std::vector<std::string>{"a", "b,c", "say \"hi\""});
  CHECK(recs[1].line == 3);
  CHECK(recs[1].fields == std::vector<std::string>{"x", "y", "z"});
  CHECK(csv::escape("a,b") == "\"a,b\"");
  CHECK(csv::escape("plain") == "plain");
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456.789}) {
    CHECK(std::stod(csv::format_exact(v)) == v);
  }
}

TEST_CASE("raw loader builds replications with missing outcomes") {
  const auto data = parse(kHeader +
                          "A,p1,ITL,1\nA,p1,TDD,2\nA,p2,ITL,3\nA,p2,TDD,\n"
                          "A,p3,ITL,NA\nA,p3,TDD,5\nB,q1,ITL,1\nB,q1,TDD,4\nB,q2,ITL,2\nB,q2,TDD,6\n");
  REQUIRE(data.size() == 2);
  CHECK(data.replications()[0].experiment_id() == "A");
  CHECK(data.observation_count() == 8);
  CHECK(data.find("A")->outcomes(Arm::control) == std::vector<double>{1, 3});
  CHECK(data.has_participant("B", "q2"));
  CHECK_FALSE(data.has_participant("B", "p1"));
  // Complete pairs drop p2 and p3; fewer than 2 pairs is an error.
  CHECK_THROWS_AS(complete_pairs(*data.find("A")), DataError);
  const auto pairs = complete_pairs(*data.find("B"));
  CHECK(pairs.n_pairs == 2);
  CHECK(pairs.differences == std::vector<double>{3, 4});
}

TEST_CASE("raw loader errors carry line numbers") {
  CHECK(error_line(kHeader + "A,p1,ITL,1\nA,p1,XYZ,2\n") == 3);
  CHECK(error_line(kHeader + "A,p1,ITL,1\nA,p1,ITL,2\n") == 3);
  CHECK(error_line(kHeader + "A,p1,ITL,1\nA,p2,ITL,abc\n") == 3);
  CHECK(error_line(kHeader + "A,p1,ITL\n") == 2);
  CHECK(error_line(kHeader + "A,,ITL,1\n") == 2);
  CHECK(error_line("experiment,participant,treatment,outcome\nA,p1,ITL,1\n") == 1);
  CHECK_THROWS_AS(parse(kHeader), DataError);
  CHECK_THROWS_AS(parse(kHeader + "A,p1,ITL,inf\nA,p2,ITL,1\n"), DataError);
  // One participant with data is not a replication.
  CHECK_THROWS_AS(parse(kHeader + "A,p1,ITL,1\nA,p1,TDD,2\n"), DataError);
}

TEST_CASE("between-subjects experiments reject participants in both arms") {
  auto o = itl_tdd();
  o.default_design = Design::between_subjects;
  CHECK_THROWS_AS(parse(kHeader + "A,p1,ITL,1\nA,p1,TDD,2\nA,p2,ITL,3\n", o), DataError);
  const auto ok = parse(kHeader + "A,p1,ITL,1\nA,p2,TDD,2\nA,p3,ITL,3\n", o);
  CHECK(ok.find("A")->design() == Design::between_subjects);
  CHECK_THROWS_AS(complete_pairs(*ok.find("A")), DataError);
}

TEST_CASE("exclusions drop a participant before validation") {
  auto o = itl_tdd();
  o.excluded.insert({"A", "p3"});
  const auto data = parse(kHeader + "A,p1,ITL,1\nA,p1,TDD,2\nA,p2,ITL,3\nA,p2,TDD,4\nA,p3,ITL,99\n", o);
  CHECK_FALSE(data.has_participant("A", "p3"));
}

TEST_CASE("raw dataset round-trips through the writer") {
  const auto data = testing::illustrative_raw();
  std::ostringstream out;
  write_raw_dataset(out, data, {"ITL", "TDD"});
  auto o = itl_tdd();
  o.outcome_name = data.outcome_name();
  o.outcome_unit = data.outcome_unit();
  std::istringstream in(out.str());
  CHECK(parse_raw_dataset(in, o) == data);
}

TEST_CASE("summary loader validates rows and round-trips") {
  const std::string header =
      "experiment_id,n_control,n_treatment,mean_control,sd_control,mean_treatment,sd_treatment,"
      "corr,design\n";
  auto load = [&](const std::string& body) {
    std::istringstream in(header + body);
    return parse_summary_dataset(in);
  };
  const auto rows = load("A,10,10,1,2,3,4,0.5,within\nB,8,9,1,2,3,4,,between\n");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].corr == 0.5);
  CHECK_FALSE(rows[1].corr.has_value());
  CHECK_THROWS_AS(load("A,10,10,1,2,3,4,,within\n"), DataError);
  CHECK_THROWS_AS(load("A,10,10,1,2,3,4,0.5,between\n"), DataError);
  CHECK_THROWS_AS(load("A,10,10,1,-2,3,4,0.5,within\n"), DataError);
  CHECK_THROWS_AS(load("A,1,10,1,2,3,4,0.5,within\n"), DataError);
  CHECK_THROWS_AS(load("A,10,10,1,2,3,4,1.5,within\n"), DataError);
  CHECK_THROWS_AS(load("A,10,10,1,2,3,4,0.5,within\nA,10,10,1,2,3,4,0.5,within\n"), DataError);

  std::ostringstream out;
  write_summary_dataset(out, rows);
  std::istringstream back(out.str());
  const auto again = parse_summary_dataset(back);
  REQUIRE(again.size() == 2);
  CHECK(again[1].n_treatment == 9);
  CHECK(again[0].sd_treatment == 4.0);
}

TEST_CASE("covariates must refer to known participants and stay in 1..4") {
  const auto data = parse(kHeader + "A,p1,ITL,1\nA,p1,TDD,2\nA,p2,ITL,3\nA,p2,TDD,4\n");
  const std::string header =
      "experiment_id,participant_id,subject_type,programming,java,unit_testing,junit\n";
  auto load = [&](const std::string& body) {
    std::istringstream in(header + body);
    return parse_covariates(in, data);
  };
  const auto table = load("A,p1,student,2,3,1,4\n");
  CHECK(table.find("A", "p1")->value(Covariate::junit) == 4);
  CHECK(table.find("A", "p2") == nullptr);
  CHECK_THROWS_WITH_AS(load("A,zz,student,2,3,1,4\n"), doctest::Contains("zz"), DataError);
  CHECK_THROWS_AS(load("A,p1,student,5,3,1,4\n"), DataError);
  CHECK_THROWS_AS(load("A,p1,robot,2,3,1,4\n"), DataError);
  CHECK(parse_covariate("unit_testing") == Covariate::unit_testing);
  CHECK(display_name(Covariate::unit_testing) == "Unit testing");
}

TEST_CASE("the committed illustrative data has the documented shape") {
  const auto data = testing::illustrative_raw();
  REQUIRE(data.size() == 4);
  const auto* upv = data.find("UPV");
  REQUIRE(upv != nullptr);
  CHECK(upv->outcomes(Arm::control).size() == 31);
  CHECK(upv->outcomes(Arm::treatment).size() == 29);
  CHECK(complete_pairs(*upv).n_pairs == 29);
  CHECK(complete_pairs(*data.find("F-Secure K")).n_pairs == 11);
}
