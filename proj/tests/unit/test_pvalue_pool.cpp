#include <doctest.h>

#include <cmath>
#include <vector>

#include "replimeta/distributions.hpp"
#include "replimeta/pvalue_pool.hpp"

using namespace replimeta;

namespace {

TestResult result(double estimate, double p) {
  TestResult r;
  r.estimate = estimate;
  r.p_value = p;
  return r;
}

}  // namespace

TEST_CASE("Fisher pooling on 2k df") {
  const std::vector<double> ps{0.01, 0.2, 0.5, 0.04};
  double stat = 0.0;
  for (double p : ps) stat -= 2.0 * std::log(p);
  const auto f = fisher_pool(ps);
  CHECK(f.statistic == doctest::Approx(stat));
  CHECK(f.df == 8);
  CHECK(f.p_value == doctest::Approx(numerics::chisq_sf(stat, 8.0)));
  CHECK(f.warning == kGuideline1Warning);
  // k p-values all equal to 1 give a statistic of zero and p = 1.
  CHECK(fisher_pool(std::vector<double>{1.0, 1.0}).p_value == doctest::Approx(1.0));
  CHECK_THROWS_AS(fisher_pool(std::vector<double>{0.0, 0.5}), std::domain_error);
  CHECK_THROWS_AS(fisher_pool(std::vector<double>{1.2}), std::domain_error);
}

TEST_CASE("Stouffer pooling") {
  const std::vector<double> ps{0.025, 0.5};
  const auto s = stouffer_pool(ps);
  CHECK(s.statistic == doctest::Approx(1.959963985 / std::sqrt(2.0)).epsilon(1e-8));
  const std::vector<double> w{2.0, 0.0};
  CHECK(stouffer_pool(ps, w).statistic == doctest::Approx(1.959963985).epsilon(1e-8));
  CHECK(stouffer_pool(ps).df == 0);
}

TEST_CASE("clamping p = 0 is reported") {
  std::vector<std::string> warnings;
  const auto out = clamp_p_values(std::vector<double>{0.0, 0.3}, &warnings);
  CHECK(out[0] > 0.0);
  CHECK(out[1] == 0.3);
  CHECK(warnings.size() == 1);
}

TEST_CASE("vote counting classifies and resolves ties as inconclusive") {
  const std::vector<TestResult> mixed{result(9.5, 0.48), result(13.3, 0.19), result(52.9, 0.0002),
                                      result(42.3, 1e-9)};
  const auto v = vote_count(mixed);
  CHECK(v.significant_positive == 2);
  CHECK(v.non_significant == 2);
  CHECK(v.verdict == Verdict::inconclusive);

  const std::vector<TestResult> pos{result(1, 0.01), result(2, 0.02), result(1, 0.4)};
  CHECK(vote_count(pos).verdict == Verdict::positive);
  const std::vector<TestResult> neg{result(-1, 0.01), result(-2, 0.02), result(-1, 0.001)};
  CHECK(vote_count(neg).verdict == Verdict::negative);
  const std::vector<TestResult> none{result(1, 0.3), result(-2, 0.6)};
  CHECK(vote_count(none).verdict == Verdict::non_significant);
  const std::vector<TestResult> split{result(1, 0.01), result(-2, 0.01)};
  CHECK(vote_count(split).verdict == Verdict::inconclusive);
  CHECK(vote_count(mixed, 0.5).significant_positive == 4);
}
