#pragma once

// Individual-participant-data models: fixed-effects ANOVA fits and the REML
// linear mixed model
//
//   y = X beta + Z_j u_j + a_i + e,   u_j ~ N(0, Psi), a_i ~ N(0, s_p^2), e ~ N(0, s^2)
//
// with a random intercept and treatment slope per experiment (unstructured
// 2x2 Psi) and a random intercept per participant. Experiments are
// independent blocks of the marginal covariance.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "replimeta/data.hpp"
#include "replimeta/ttest.hpp"

namespace replimeta {

inline constexpr std::string_view kGuideline2Warning =
    "Guideline 2: IPD-MT pools raw data as if it came from one experiment. With unbalanced or "
    "heterogeneous replications it may give biased or underpowered results; prefer IPD-S.";

/// Inference rule for fixed effects of a fitted model.
///   z                      normal reference distribution
///   experiments_minus_one  t with (number of experiments - 1) df
///   residual               t with (observations - fixed effects) df (OLS fits)
enum class DfRule { z, experiments_minus_one, residual };
std::string_view to_string(DfRule rule);
DfRule parse_df_rule(std::string_view text);

enum class RandomStructure { none, experiment_intercept_slope };
enum class ModeratorLevel { experiment, participant };
enum class Separation { naive, within_between };
std::string_view to_string(Separation s);
Separation parse_separation(std::string_view text);

struct ModeratorSpec {
  std::string name;
  ModeratorLevel level = ModeratorLevel::participant;
  Separation separation = Separation::naive;
};

struct ModelSpec {
  bool experiment_factor = false;
  RandomStructure random = RandomStructure::experiment_intercept_slope;
  bool participant_intercept = true;
  std::optional<ModeratorSpec> moderator;
};

/// Fixed-effects design and grouping for one fit. Every fixed column is
/// base_k (times the treatment indicator when interacts_k is set).
struct LmmDesign {
  Eigen::VectorXd y;
  Eigen::VectorXd treatment;
  Eigen::MatrixXd x;
  std::vector<std::string> names;
  std::vector<bool> interacts;
  /// Mean of base_k over all rows, used to form cell means.
  std::vector<double> base_mean;
  /// Dense indices; experiment ids and participants in first-appearance order.
  std::vector<std::size_t> experiment;
  std::vector<std::size_t> participant;
  std::vector<std::string> experiment_ids;
  std::size_t n_participants = 0;
};

enum class MissingPolicy { all_observations, complete_pairs };

/// Intercept + treatment (+ experiment indicators) over the non-missing rows.
LmmDesign build_design(const ReplicationSet& data, bool experiment_factor,
                       MissingPolicy missing = MissingPolicy::all_observations);

struct VarianceComponents {
  double experiment_intercept = 0.0;
  double experiment_slope = 0.0;
  double experiment_covariance = 0.0;
  double participant = 0.0;
  double residual = 0.0;

  double sd_diff() const;
};

/// Marginal covariance of one experiment's rows, Z Psi Z' + s_p^2 P P' + s^2 I.
Eigen::MatrixXd marginal_covariance_block(std::span<const double> treatment,
                                          std::span<const std::size_t> participant,
                                          const VarianceComponents& vc);

struct FixedEffect {
  std::string name;
  double estimate = 0.0;
  double se = 0.0;
  double statistic = 0.0;
  double df = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double p_value = 1.0;
};

struct LmmFit {
  ModelSpec spec;
  Eigen::VectorXd beta;
  Eigen::MatrixXd beta_covariance;
  std::vector<std::string> names;
  /// Coefficient weights giving the control and treatment cell means.
  Eigen::VectorXd control_contrast;
  Eigen::VectorXd treatment_contrast;
  VarianceComponents variance;
  /// Fixed effects and cell means under `df_rule`.
  DfRule df_rule = DfRule::z;
  double alpha = 0.05;
  std::vector<FixedEffect> fixed;
  FixedEffect control_mean;
  FixedEffect treatment_mean;
  /// treatment_mean / control_mean.
  double ratio = 0.0;
  /// Mean of the participant-level covariate over the analyzed rows.
  std::optional<double> moderator_mean;
  double reml_criterion = 0.0;
  bool converged = true;
  std::size_t iterations = 0;
  std::vector<double> trace;
  std::size_t n_observations = 0;
  std::size_t n_experiments = 0;
  std::size_t n_participants = 0;
  std::vector<std::string> warnings;

  const FixedEffect& effect(std::string_view name) const;
  const FixedEffect& treatment_effect() const { return effect("treatment"); }
  /// Same fit, inference recomputed under another rule or alpha.
  LmmFit with_inference(DfRule rule, double alpha) const;
};

struct FitOptions {
  DfRule df_rule = DfRule::z;
  double alpha = 0.05;
  double tolerance = 1e-9;
  std::size_t max_iter = 2000;
};

/// Generic REML fit of a prepared design. Throws std::invalid_argument for
/// non-identifiable specifications and std::runtime_error when the marginal
/// covariance is singular everywhere the optimizer looks.
LmmFit fit_design(const LmmDesign& design, const ModelSpec& spec, const FitOptions& options = {});

/// Least-squares fit with treatment and (optionally) experiment as factors.
/// Inference uses residual df. Without the experiment factor this is IPD-MT
/// and the fit carries the Guideline-2 warning.
LmmFit fit_ols(const ReplicationSet& data, bool include_experiment_factor,
               MissingPolicy missing = MissingPolicy::all_observations, double alpha = 0.05);

/// One dependent t-test over the complete pairs of every replication,
/// ignoring the experiment (IPD-MT).
TestResult pooled_paired_t(const ReplicationSet& data, const TTestOptions& options = {});

/// IPD-S: treatment fixed, random experiment intercept and slope, random
/// participant intercept. Rows with a missing outcome are left out.
LmmFit fit_lmm_reml(const ReplicationSet& data, const ModelSpec& spec = {},
                    const FitOptions& options = {});

/// Adds indicator(label) and treatment x indicator(label) for every label
/// level after the first in sorted order. Throws when the label is constant.
LmmFit moderator_experiment_level(const ReplicationSet& data,
                                  const std::map<std::string, std::string>& labels,
                                  const FitOptions& options = {});

/// Naive: x and treatment:x. Within/between: (x - experiment mean of x) and
/// the experiment mean as separate main effects and treatment interactions;
/// "treatment:<name>" is then the within-experiment term. Participants
/// without a covariate row are dropped with a warning.
LmmFit moderator_participant_level(const ReplicationSet& data, const CovariateTable& covariates,
                                   Covariate covariate, Separation separation,
                                   const FitOptions& options = {});

/// Name of the row reporting a moderator's interaction in a moderator fit.
std::string interaction_name(const LmmFit& fit);

nlohmann::json to_json(const LmmFit& fit);

}  // namespace replimeta
