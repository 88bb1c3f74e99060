#include <doctest.h>

#include <cmath>

#include "replimeta/descriptives.hpp"
#include "replimeta/simulation.hpp"

using namespace replimeta;

TEST_CASE("PCG32 matches the reference generator") {
  // pcg32_srandom(42, 54) from the reference implementation's demo.
  Pcg32 g(42, 54);
  const std::uint32_t expected[] = {0xa15c02b7u, 0x7b47f409u, 0xba1d3330u,
                                    0x83d2f293u, 0xbfa4784bu, 0xcbed606eu};
  for (auto e : expected) CHECK(g.next_u32() == e);
}

TEST_CASE("uniform and normal variates") {
  auto g = substream(1, 2, 3, 4);
  std::vector<double> u, z;
  for (int i = 0; i < 50000; ++i) {
    const double x = g.next_open01();
    REQUIRE(x > 0.0);
    REQUIRE(x < 1.0);
    u.push_back(x);
    z.push_back(g.next_normal(5.0, 2.0));
  }
  CHECK(mean(u) == doctest::Approx(0.5).epsilon(0.01));
  CHECK(mean(z) == doctest::Approx(5.0).epsilon(0.01));
  CHECK(sample_sd(z) == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("substreams are independent of generation order") {
  auto a = substream(7, 10, 1, 0);
  auto b = substream(7, 10, 1, 0);
  auto c = substream(7, 11, 1, 0);
  const auto first = a.next_u32();
  CHECK(first == b.next_u32());
  CHECK(first != c.next_u32());
  CHECK(splitmix64(0) != splitmix64(1));

  const auto spec = unbalanced_two_experiment_scenario();
  CHECK(simulate_scenario(spec, 5) == simulate_scenario(spec, 5));
  CHECK_FALSE(simulate_scenario(spec, 5) == simulate_scenario(spec, 6));
}

TEST_CASE("the unbalanced scenario: analytic values and shape") {
  const auto spec = unbalanced_two_experiment_scenario();
  CHECK(analytic_ipd_mt(spec) == doctest::Approx(42.0));
  CHECK(analytic_ipd_s(spec) == doctest::Approx(10.0));
  const auto data = simulate_scenario(spec, 0);
  REQUIRE(data.size() == 2);
  CHECK(data.replications()[0].design() == Design::between_subjects);
  CHECK(data.replications()[0].outcomes(Arm::control).size() == 90);
  CHECK(data.replications()[1].outcomes(Arm::treatment).size() == 90);
}

TEST_CASE("bias comparison is deterministic given the seed") {
  auto spec = unbalanced_two_experiment_scenario();
  spec.n_iterations = 200;
  const auto a = compare_mt_vs_s(spec);
  const auto b = compare_mt_vs_s(spec);
  CHECK(a.ipd_mt.estimates == b.ipd_mt.estimates);
  CHECK(a.ipd_s.estimates == b.ipd_s.estimates);
  CHECK(a.ipd_mt.mean == b.ipd_mt.mean);
  spec.seed += 1;
  CHECK(compare_mt_vs_s(spec).ipd_mt.estimates != a.ipd_mt.estimates);
  CHECK(a.ipd_mt.lower_99 <= a.ipd_mt.mean);
  CHECK(a.ipd_mt.upper_99 >= a.ipd_mt.mean);
}

TEST_CASE("scenario validation and JSON round trip") {
  auto spec = unbalanced_two_experiment_scenario();
  const auto back = scenario_from_json(to_json(spec));
  CHECK(back.seed == spec.seed);
  CHECK(back.experiments.size() == 2);
  CHECK(back.experiments[1].treatment.n == 90);
  spec.experiments[0].control.sd = 0.0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = unbalanced_two_experiment_scenario();
  spec.experiments[0].treatment.n = 1;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}
