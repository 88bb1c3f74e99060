#include <doctest.h>

#include <vector>

#include "helpers.hpp"
#include "replimeta/ttest.hpp"

using namespace replimeta;

TEST_CASE("independent t-test on {1,2,3} vs {4,5,6}") {
  const std::vector<double> c{1, 2, 3};
  const std::vector<double> t{4, 5, 6};
  TTestOptions pooled;
  pooled.welch = false;
  const auto r = independent_t_test(c, t, pooled);
  CHECK(r.estimate == doctest::Approx(3.0));
  CHECK(r.df == doctest::Approx(4.0));
  CHECK(r.statistic == doctest::Approx(3.674234614).epsilon(1e-9));
  CHECK(r.p_value == doctest::Approx(0.02131164).epsilon(1e-6));
  // Equal variances and sizes: Welch gives the same df.
  const auto w = independent_t_test(c, t);
  CHECK(w.df == doctest::Approx(4.0));
  CHECK(w.statistic == doctest::Approx(r.statistic));
}

TEST_CASE("paired t-test hand values under both df rules") {
  const auto rep = testing::paired_replication("A", {10, 12, 9, 14, 11}, {13, 15, 9, 18, 12});
  // differences 3, 3, 0, 4, 1: mean 2.2, sd sqrt(2.7)
  const auto pairs = complete_pairs(rep);
  const auto r = paired_t_test(pairs);
  const double se = std::sqrt(2.7 / 5.0);
  CHECK(r.estimate == doctest::Approx(2.2));
  CHECK(r.se == doctest::Approx(se));
  CHECK(r.df == 4.0);
  CHECK(r.statistic == doctest::Approx(2.2 / se));
  CHECK(r.ci_low == doctest::Approx(2.2 - 2.776445105 * se).epsilon(1e-8));
  CHECK(r.p_value == doctest::Approx(0.0401862183).epsilon(1e-8));

  TTestOptions o;
  o.paired_df = PairedDfRule::observations_minus_two;
  const auto r2 = paired_t_test(pairs, o);
  CHECK(r2.df == 8.0);
  CHECK(r2.se == doctest::Approx(se));
  CHECK(r2.p_value < r.p_value);

  TTestOptions one;
  one.sidedness = Sidedness::one_sided_greater;
  CHECK(paired_t_test(pairs, one).p_value == doctest::Approx(r.p_value / 2.0));

  const auto flat = testing::paired_replication("B", {1, 2, 3}, {2, 3, 4});
  CHECK_THROWS_AS(paired_t_test(complete_pairs(flat)), std::domain_error);
}

TEST_CASE("t-tests are invariant under shifts and positive rescaling") {
  const std::vector<double> c{3.1, 4.7, 2.2, 8.4, 5.0};
  const std::vector<double> t{6.3, 5.9, 7.7, 9.1, 4.4, 8.0};
  const auto base = independent_t_test(c, t);
  std::vector<double> c2, t2;
  for (double v : c) c2.push_back(-40.0 + 3.0 * v);
  for (double v : t) t2.push_back(-40.0 + 3.0 * v);
  const auto moved = independent_t_test(c2, t2);
  CHECK(moved.estimate == doctest::Approx(3.0 * base.estimate));
  CHECK(moved.statistic == doctest::Approx(base.statistic));
  CHECK(moved.df == doctest::Approx(base.df));
  CHECK(moved.p_value == doctest::Approx(base.p_value));
  CHECK(moved.ci_high == doctest::Approx(3.0 * base.ci_high));

  const auto data = testing::illustrative_raw();
  const auto scaled = testing::affine(data, 5.0, 0.5);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto a = individual_analysis(data.replications()[i]);
    const auto b = individual_analysis(scaled.replications()[i]);
    CHECK(b.estimate == doctest::Approx(0.5 * a.estimate));
    CHECK(b.p_value == doctest::Approx(a.p_value));
  }
}

TEST_CASE("sidedness parsing and p-values") {
  CHECK(parse_sidedness("two_sided") == Sidedness::two_sided);
  CHECK(parse_paired_df_rule("observations-minus-2") == PairedDfRule::observations_minus_two);
  CHECK_THROWS_AS(parse_sidedness("sideways"), std::invalid_argument);
  CHECK(t_p_value(-2.0, 10.0, Sidedness::one_sided_greater) > 0.5);
}
