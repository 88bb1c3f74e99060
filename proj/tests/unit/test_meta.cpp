#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "replimeta/meta.hpp"

using namespace replimeta;

namespace {

EffectSize es(std::string id, double d, double var) {
  EffectSize e;
  e.experiment_id = std::move(id);
  e.d = d;
  e.variance = var;
  e.n_effective = 10;
  return e;
}

std::vector<EffectSize> illustrative_effects() {
  return {es("F-Secure H", 0.2708998364, 0.1416814260), es("F-Secure K", 0.4376708779, 0.1155547602),
          es("F-Secure O", 1.8999058595, 0.3846611846), es("UPV", 1.2805525902, 0.0665207557)};
}

/// Restricted log-likelihood of the normal-normal model, written out
/// independently of the library.
double restricted_loglik(const std::vector<EffectSize>& effects, double tau2) {
  double sw = 0.0, swd = 0.0, slog = 0.0;
  for (const auto& e : effects) {
    const double w = 1.0 / (e.variance + tau2);
    sw += w;
    swd += w * e.d;
    slog += std::log(e.variance + tau2);
  }
  const double mu = swd / sw;
  double rss = 0.0;
  for (const auto& e : effects) rss += (e.d - mu) * (e.d - mu) / (e.variance + tau2);
  return -0.5 * (slog + std::log(sw) + rss);
}

double grid_reml(const std::vector<EffectSize>& effects) {
  double best = 0.0;
  double best_ll = restricted_loglik(effects, 0.0);
  for (double step = 0.01, lo = 0.0, hi = 5.0; step >= 1e-7; step /= 10.0) {
    for (double t = lo; t <= hi; t += step) {
      const double ll = restricted_loglik(effects, t);
      if (ll > best_ll) {
        best_ll = ll;
        best = t;
      }
    }
    lo = std::max(0.0, best - step);
    hi = best + step;
  }
  return best;
}

}  // namespace

TEST_CASE("DL pooling reproduces the hand derivation") {
  const auto m = pool_random_dl(illustrative_effects());
  CHECK(m.q == doctest::Approx(9.4189).epsilon(1e-4));
  CHECK(m.q_df == 3);
  CHECK(m.tau2 == doctest::Approx(0.28372).epsilon(1e-4));
  CHECK(m.pooled == doctest::Approx(0.89411).epsilon(1e-4));
  CHECK(m.se == doctest::Approx(0.32957).epsilon(1e-4));
  CHECK(m.i2 == doctest::Approx(68.149).epsilon(1e-4));
  CHECK(heterogeneity_label(m.i2) == "medium");
  CHECK(m.ci_low == doctest::Approx(m.pooled - 1.959963985 * m.se));
}

TEST_CASE("DL pooling from the committed summary file") {
  const auto c = testing::illustrative_config();
  const auto m = pool_random_dl(effect_sizes(load_summary_dataset(*c.summary)));
  CHECK(m.pooled == doctest::Approx(0.8941).epsilon(1e-3));
  CHECK(m.i2 == doctest::Approx(68.15).epsilon(1e-3));
}

TEST_CASE("fixed and DL random effects coincide when tau^2 = 0") {
  // Homogeneous effects: Q < df, so DL truncates tau^2 at zero.
  const std::vector<EffectSize> homo{es("a", 0.50, 0.04), es("b", 0.52, 0.05), es("c", 0.49, 0.03),
                                     es("d", 0.51, 0.06)};
  const auto f = pool_fixed(homo);
  const auto r = pool_random_dl(homo);
  REQUIRE(r.tau2 == 0.0);
  CHECK(r.pooled == doctest::Approx(f.pooled).epsilon(1e-15));
  CHECK(r.se == doctest::Approx(f.se).epsilon(1e-15));
  CHECK(r.ci_low == doctest::Approx(f.ci_low).epsilon(1e-15));
  CHECK(r.i2 == 0.0);
  CHECK(pool_random_reml(homo).tau2 == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
}

TEST_CASE("pooled estimates are convex combinations of the inputs") {
  const auto effects = illustrative_effects();
  const auto [lo, hi] = std::minmax_element(effects.begin(), effects.end(),
                                            [](const auto& a, const auto& b) { return a.d < b.d; });
  for (const auto& m : {pool_fixed(effects), pool_random_dl(effects), pool_random_reml(effects)}) {
    CHECK(m.pooled >= lo->d);
    CHECK(m.pooled <= hi->d);
    double sum = 0.0;
    for (double w : m.weights) {
      CHECK(w > 0.0);
      sum += w;
    }
    CHECK(sum == doctest::Approx(1.0));
  }
  // Random effects pull the weights towards equality.
  CHECK(pool_random_dl(effects).weights[3] < pool_fixed(effects).weights[3]);
}

TEST_CASE("REML tau^2 maximizes the restricted likelihood (grid oracle)") {
  const auto effects = illustrative_effects();
  const double grid = grid_reml(effects);
  const auto m = pool_random_reml(effects);
  CHECK(m.tau2 == doctest::Approx(grid).epsilon(1e-5));
  CHECK(restricted_loglik(effects, m.tau2) >= restricted_loglik(effects, grid) - 1e-10);

  const std::vector<EffectSize> spread{es("a", -0.4, 0.02), es("b", 0.9, 0.05), es("c", 0.1, 0.01),
                                       es("d", 1.6, 0.08), es("e", 0.5, 0.03)};
  CHECK(pool_random_reml(spread).tau2 == doctest::Approx(grid_reml(spread)).epsilon(1e-5));
}

TEST_CASE("single-study pooling returns the study with a warning") {
  const auto m = pool_random_dl({es("only", 0.7, 0.09)});
  CHECK(m.pooled == 0.7);
  CHECK(m.se == doctest::Approx(0.3));
  CHECK(m.tau2 == 0.0);
  CHECK(m.i2 == 0.0);
  CHECK_FALSE(m.warnings.empty());
  CHECK_THROWS(pool_fixed({}));
}

TEST_CASE("heterogeneity labels at 25/50/75") {
  CHECK(heterogeneity_label(0.0) == "negligible");
  CHECK(heterogeneity_label(24.9) == "negligible");
  CHECK(heterogeneity_label(25.0) == "small");
  CHECK(heterogeneity_label(67.8) == "medium");
  CHECK(heterogeneity_label(75.0) == "large");
}

TEST_CASE("I^2 from tau^2 equals (Q - df)/Q under DL") {
  const auto effects = illustrative_effects();
  const auto m = pool_random_dl(effects);
  CHECK(i2_from_tau2(effects, m.tau2) == doctest::Approx(m.i2).epsilon(1e-10));
}

TEST_CASE("subgroups get their own tau^2; a singleton has I^2 = 0 exactly") {
  auto effects = illustrative_effects();
  for (std::size_t i = 0; i < 3; ++i) effects[i].subgroup_label = "professional";
  effects[3].subgroup_label = "student";
  for (auto est : {Tau2Estimator::dersimonian_laird, Tau2Estimator::reml}) {
    const auto s = subgroup_analysis(effects, est);
    REQUIRE(s.groups.size() == 2);
    CHECK(s.labels[0] == "professional");
    CHECK(s.groups[1].i2 == 0.0);
    CHECK(s.groups[1].tau2 == 0.0);
    CHECK(s.groups[1].pooled == effects[3].d);
    CHECK(s.has_difference);
    CHECK(s.difference == doctest::Approx(s.groups[1].pooled - s.groups[0].pooled));
    CHECK(s.difference_se == doctest::Approx(std::hypot(s.groups[0].se, s.groups[1].se)));
  }
  effects[0].subgroup_label.reset();
  CHECK_THROWS_AS(subgroup_analysis(effects), std::invalid_argument);
}

TEST_CASE("meta-regression recovers an exact line") {
  std::vector<EffectSize> effects;
  for (int i = 0; i < 5; ++i) {
    auto e = es("s" + std::to_string(i), 0.2 + 0.3 * i, 0.05 + 0.01 * i);
    e.moderator_x = static_cast<double>(i);
    effects.push_back(e);
  }
  const auto m = meta_regression(effects);
  CHECK(m.slope.estimate == doctest::Approx(0.3));
  CHECK(m.intercept.estimate == doctest::Approx(0.2));
  CHECK(m.tau2 == 0.0);
  CHECK(m.q_residual == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  effects.pop_back();
  effects.pop_back();
  effects.pop_back();
  CHECK_THROWS_AS(meta_regression(effects), std::invalid_argument);
}

TEST_CASE("forest model mirrors the meta-analysis") {
  const auto effects = illustrative_effects();
  const auto m = pool_random_dl(effects);
  const auto f = forest_model(effects, m);
  REQUIRE(f.studies.size() == 4);
  CHECK(f.pooled.d == m.pooled);
  double total = 0.0;
  for (const auto& s : f.studies) total += s.weight_percent;
  CHECK(total == doctest::Approx(100.0));
  CHECK(f.studies[0].ci_high - f.studies[0].d == doctest::Approx(1.959963985 * std::sqrt(0.1416814260)));
}
