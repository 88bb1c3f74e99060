#include <doctest.h>

#include "helpers.hpp"
#include "replimeta/effect_size.hpp"

using namespace replimeta;

namespace {

SummaryRow within_row(std::string id, std::size_t n, double mc, double sc, double mt, double st,
                      double r) {
  SummaryRow row;
  row.experiment_id = std::move(id);
  row.n_control = row.n_treatment = n;
  row.mean_control = mc;
  row.sd_control = sc;
  row.mean_treatment = mt;
  row.sd_treatment = st;
  row.corr = r;
  return row;
}

}  // namespace

TEST_CASE("repeated-measures d reproduces the worked example in the header") {
  struct Case {
    SummaryRow row;
    double d;
    double var;
  };
  const Case cases[] = {
      {within_row("F-Secure H", 6, 30.71, 36.58, 40.23, 33.43, 0.59), 0.2709, 0.14168},
      {within_row("F-Secure K", 11, 22.17, 20.44, 35.42, 35.40, 0.42), 0.4377, 0.11555},
      {within_row("F-Secure O", 7, 16.05, 20.81, 68.97, 31.53, 0.52), 1.8999, 0.38466},
      {within_row("UPV", 29, 33.38, 39.79, 77.16, 21.04, 0.47), 1.2806, 0.06652},
  };
  for (const auto& c : cases) {
    const auto e = repeated_measures_d(c.row);
    CAPTURE(c.row.experiment_id);
    CHECK(e.d == doctest::Approx(c.d).epsilon(0).scale(1.0).epsilon(5e-5));
    CHECK(std::fabs(e.variance - c.var) <= 5e-6);
    CHECK(e.n_effective == c.row.n_control);
    CHECK_FALSE(e.corrected);
  }
}

TEST_CASE("repeated-measures d uses the smaller arm as n") {
  auto row = within_row("UPV", 29, 33.38, 39.79, 77.16, 21.04, 0.47);
  row.n_control = 31;
  CHECK(repeated_measures_d(row).n_effective == 29);
  CHECK(repeated_measures_d(row, 20).n_effective == 20);
  row.corr = 1.0;
  CHECK_THROWS_AS(repeated_measures_d(row), std::domain_error);
}

TEST_CASE("Hedges correction") {
  const auto e = repeated_measures_d(within_row("A", 11, 10, 5, 15, 5, 0.5));
  const double j = 1.0 - 3.0 / (4.0 * 10.0 - 1.0);
  const auto g = hedges_correction(e);
  CHECK(g.corrected);
  CHECK(g.d == doctest::Approx(j * e.d));
  CHECK(g.variance == doctest::Approx(j * j * e.variance));
  CHECK_THROWS_AS(hedges_correction(g), std::logic_error);
  CHECK_THROWS_AS(hedges_correction(e, 1.0), std::domain_error);
  EffectSizeOptions o;
  o.hedges = true;
  CHECK(effect_size(within_row("A", 11, 10, 5, 15, 5, 0.5), o).d == doctest::Approx(g.d));
}

TEST_CASE("between-subjects d on the pooled sd") {
  SummaryRow row;
  row.experiment_id = "B";
  row.design = Design::between_subjects;
  row.n_control = 10;
  row.n_treatment = 20;
  row.mean_control = 5;
  row.mean_treatment = 8;
  row.sd_control = 2;
  row.sd_treatment = 3;
  const double pooled = std::sqrt((9 * 4.0 + 19 * 9.0) / 28.0);
  const double d = 3.0 / pooled;
  const auto e = between_subjects_d(row);
  CHECK(e.d == doctest::Approx(d));
  CHECK(e.variance == doctest::Approx(30.0 / 200.0 + d * d / 60.0));
  CHECK(effect_size(row).d == doctest::Approx(d));
  CHECK_THROWS_AS(repeated_measures_d(row), std::domain_error);
}

TEST_CASE("d is invariant under shifts and positive scaling, and flips sign under reflection") {
  const auto data = testing::illustrative_raw();
  const auto base = effect_size(data.replications()[1]);
  const auto scaled = effect_size(testing::affine(data, 12.0, 4.0).replications()[1]);
  const auto mirrored = effect_size(testing::affine(data, 0.0, -1.0).replications()[1]);
  CHECK(scaled.d == doctest::Approx(base.d));
  CHECK(scaled.variance == doctest::Approx(base.variance));
  CHECK(mirrored.d == doctest::Approx(-base.d));
  CHECK(mirrored.variance == doctest::Approx(base.variance));
}

TEST_CASE("effect size inputs keep complete pairs only") {
  const auto data = testing::illustrative_raw();
  const auto row = effect_size_inputs(*data.find("UPV"));
  CHECK(row.n_control == 29);
  CHECK(row.n_treatment == 29);
  REQUIRE(row.corr.has_value());
}
