#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "replimeta/descriptives.hpp"
#include "replimeta/lmm.hpp"

using namespace replimeta;

namespace {

/// Least squares by QR, independent of the library's solver.
Eigen::VectorXd qr_ols(const LmmDesign& d) { return d.x.colPivHouseholderQr().solve(d.y); }

}  // namespace

TEST_CASE("OLS fits match an independent least-squares solve") {
  const auto data = testing::illustrative_raw();
  for (bool factor : {false, true}) {
    const auto design = build_design(data, factor);
    const auto fit = fit_ols(data, factor);
    const Eigen::VectorXd beta = qr_ols(design);
    CHECK((fit.beta - beta).norm() <= 1e-9 * beta.norm());
    const Eigen::VectorXd resid = design.y - design.x * beta;
    const double dof = static_cast<double>(design.y.size() - design.x.cols());
    const double s2 = resid.squaredNorm() / dof;
    const Eigen::MatrixXd cov = s2 * (design.x.transpose() * design.x).inverse();
    CHECK((fit.beta_covariance - cov).norm() <= 1e-9 * cov.norm());
    CHECK(fit.treatment_effect().df == doctest::Approx(dof));
    CHECK(fit.warnings.empty() == factor);
  }
}

TEST_CASE("complete-pair ANOVA differs from the all-observation ANOVA only through UPV") {
  const auto data = testing::illustrative_raw();
  const auto all = fit_ols(data, true, MissingPolicy::all_observations);
  const auto pairs = fit_ols(data, true, MissingPolicy::complete_pairs);
  CHECK(all.n_observations == 108);
  CHECK(pairs.n_observations == 108 - 2);
  // Balanced complete pairs: the treatment coefficient is the n-weighted mean
  // of the per-experiment differences, which is the pooled paired mean.
  const auto pooled = pooled_paired_t(data);
  CHECK(pairs.treatment_effect().estimate == doctest::Approx(pooled.estimate).epsilon(1e-10));
}

TEST_CASE("random participant intercept on balanced pairs equals the paired t-test") {
  const auto rep = testing::paired_replication("A", {10, 12, 9, 14, 11, 20, 7, 13},
                                               {13, 15, 9, 18, 12, 24, 10, 13});
  const ReplicationSet data({rep});
  ModelSpec spec;
  spec.random = RandomStructure::none;
  spec.participant_intercept = true;
  const auto fit = fit_lmm_reml(data, spec);
  const auto t = paired_t_test(complete_pairs(rep));
  CHECK(fit.treatment_effect().estimate == doctest::Approx(t.estimate).epsilon(1e-9));
  CHECK(fit.treatment_effect().se == doctest::Approx(t.se).epsilon(1e-5));
}

TEST_CASE("marginal covariance block matches the model and simulated draws") {
  VarianceComponents vc;
  vc.experiment_intercept = 4.0;
  vc.experiment_slope = 2.25;
  vc.experiment_covariance = -1.2;
  vc.participant = 9.0;
  vc.residual = 1.0;
  const std::vector<double> trt{0, 1, 0, 1};
  const std::vector<std::size_t> pid{0, 0, 1, 1};
  const auto v = marginal_covariance_block(trt, pid, vc);
  // Closed form entries.
  CHECK(v(0, 0) == doctest::Approx(4.0 + 9.0 + 1.0));
  CHECK(v(1, 1) == doctest::Approx(4.0 + 2.25 - 2.4 + 9.0 + 1.0));
  CHECK(v(0, 1) == doctest::Approx(4.0 - 1.2 + 9.0));
  CHECK(v(0, 2) == doctest::Approx(4.0));
  CHECK(v(1, 3) == doctest::Approx(4.0 + 2.25 - 2.4));
  CHECK(v(1, 2) == doctest::Approx(4.0 - 1.2));

  // Monte-Carlo route: draw (u0, u1, a_0, a_1, e) and compare the sample
  // covariance with the block.
  const double rho = vc.experiment_covariance / std::sqrt(vc.experiment_intercept * vc.experiment_slope);
  auto g = substream(99, 0, 0, 0);
  constexpr int kDraws = 200000;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(4, 4);
  for (int s = 0; s < kDraws; ++s) {
    const double z0 = g.next_normal(0.0, 1.0);
    const double z1 = g.next_normal(0.0, 1.0);
    const double u0 = 2.0 * z0;
    const double u1 = 1.5 * (rho * z0 + std::sqrt(1.0 - rho * rho) * z1);
    const double a[2] = {g.next_normal(0.0, 3.0), g.next_normal(0.0, 3.0)};
    Eigen::Vector4d y;
    for (int r = 0; r < 4; ++r) y(r) = u0 + trt[r] * u1 + a[pid[r]] + g.next_normal(0.0, 1.0);
    sum += y * y.transpose();
  }
  const Eigen::MatrixXd empirical = sum / kDraws;
  // Entries are at most ~16, so the Monte-Carlo sd is about 16 sqrt(2 / 2e5) = 0.05.
  CHECK((empirical - v).cwiseAbs().maxCoeff() < 0.25);
}

TEST_CASE("IPD-S fit on the illustrative data") {
  const auto fit = fit_lmm_reml(testing::illustrative_raw());
  CHECK(fit.converged);
  CHECK(fit.n_experiments == 4);
  CHECK(fit.n_observations == 108);
  CHECK(fit.treatment_effect().estimate == doctest::Approx(29.108).epsilon(1e-3));
  CHECK(fit.control_mean.estimate == doctest::Approx(27.42).epsilon(1e-3));
  CHECK(fit.variance.sd_diff() == doctest::Approx(16.10).epsilon(5e-3));
  CHECK(fit.ratio == doctest::Approx(fit.treatment_mean.estimate / fit.control_mean.estimate));
  CHECK(fit.treatment_effect().p_value < 0.01);
  // The alternative rule widens the interval; the point estimate is the same.
  const auto t3 = fit.with_inference(DfRule::experiments_minus_one, 0.05);
  CHECK(t3.treatment_effect().df == 3.0);
  CHECK(t3.treatment_effect().estimate == fit.treatment_effect().estimate);
  CHECK(t3.treatment_effect().p_value > fit.treatment_effect().p_value);
  for (std::size_t i = 1; i < fit.trace.size(); ++i) CHECK(fit.trace[i] <= fit.trace[i - 1]);
}

TEST_CASE("LMM fits are equivariant under affine maps of the outcome") {
  const auto data = testing::illustrative_raw();
  const auto base = fit_lmm_reml(data);
  const double a = -15.0, b = 0.4;
  const auto moved = fit_lmm_reml(testing::affine(data, a, b));
  CHECK(moved.treatment_effect().estimate == doctest::Approx(b * base.treatment_effect().estimate).epsilon(1e-4));
  CHECK(moved.treatment_effect().se == doctest::Approx(b * base.treatment_effect().se).epsilon(1e-3));
  CHECK(moved.treatment_effect().p_value == doctest::Approx(base.treatment_effect().p_value).epsilon(1e-3));
  CHECK(moved.control_mean.estimate == doctest::Approx(a + b * base.control_mean.estimate).epsilon(1e-4));
  CHECK(moved.variance.residual == doctest::Approx(b * b * base.variance.residual).epsilon(1e-3));
  CHECK(moved.variance.participant == doctest::Approx(b * b * base.variance.participant).epsilon(1e-3));
  CHECK(moved.variance.sd_diff() == doctest::Approx(b * base.variance.sd_diff()).epsilon(1e-3));
}

TEST_CASE("REML recovers simulated parameters within Monte-Carlo error") {
  const testing::LmmTruth truth;
  constexpr int kReps = 20;
  std::vector<double> slope, resid, part;
  for (int r = 0; r < kReps; ++r) {
    const auto fit = fit_lmm_reml(testing::simulate_lmm(truth, 10, 25, 1000 + r));
    slope.push_back(fit.treatment_effect().estimate);
    resid.push_back(fit.variance.residual);
    part.push_back(fit.variance.participant);
  }
  auto within_mc = [&](const std::vector<double>& est, double target) {
    const double se = sample_sd(est) / std::sqrt(static_cast<double>(est.size()));
    CAPTURE(mean(est));
    CAPTURE(se);
    CHECK(std::fabs(mean(est) - target) <= 3.5 * se);
  };
  within_mc(slope, truth.beta1);
  within_mc(resid, truth.sd_residual * truth.sd_residual);
  within_mc(part, truth.sd_participant * truth.sd_participant);
}

TEST_CASE("moderator models") {
  const auto c = testing::illustrative_config();
  const auto data = load_raw_dataset(*c.raw, c.parse_options());
  const auto cov = load_covariates(*c.covariates, data);

  const auto exp_fit = moderator_experiment_level(data, c.experiment_labels);
  CHECK(interaction_name(exp_fit) == "treatment:label[student]");
  CHECK(exp_fit.effect("treatment:label[student]").estimate == doctest::Approx(17.9).epsilon(0.01));

  const auto naive = moderator_participant_level(data, cov, Covariate::programming, Separation::naive);
  CHECK(naive.effect(interaction_name(naive)).estimate == doctest::Approx(15.73).epsilon(1e-3));
  CHECK_FALSE(naive.warnings.empty());  // participants without covariates are dropped

  const auto wb = moderator_participant_level(data, cov, Covariate::programming,
                                              Separation::within_between);
  CHECK(wb.names.size() > naive.names.size());

  std::map<std::string, std::string> constant;
  for (const auto& rep : data.replications()) constant[rep.experiment_id()] = "same";
  CHECK_THROWS_AS(moderator_experiment_level(data, constant), std::invalid_argument);
}

TEST_CASE("df rule parsing") {
  CHECK(parse_df_rule("z") == DfRule::z);
  CHECK(parse_df_rule("experiments-minus-1") == DfRule::experiments_minus_one);
  CHECK_THROWS_AS(parse_df_rule("kenward-roger"), std::invalid_argument);
}
