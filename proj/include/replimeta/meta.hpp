#pragma once

// Aggregated-data pooling of standardized mean differences.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "replimeta/effect_size.hpp"

namespace replimeta {

enum class MetaModel { fixed, random_dl, random_reml };
std::string_view to_string(MetaModel model);

/// Between-study variance estimator for random-effects pooling.
enum class Tau2Estimator { dersimonian_laird, reml };
std::string_view to_string(Tau2Estimator estimator);
Tau2Estimator parse_tau2_estimator(std::string_view text);

struct MetaResult {
  MetaModel model = MetaModel::fixed;
  std::size_t k = 0;
  double pooled = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double z = 0.0;
  double p_value = 1.0;
  double tau2 = 0.0;
  /// Cochran's Q under fixed-effect weights, on k - 1 df.
  double q = 0.0;
  std::size_t q_df = 0;
  double q_p = 1.0;
  /// Percentage in [0, 100).
  double i2 = 0.0;
  /// Normalized weights, in input order.
  std::vector<double> weights;
  double alpha = 0.05;
  std::vector<std::string> warnings;
};

MetaResult pool_fixed(const std::vector<EffectSize>& effects, double alpha = 0.05);
/// DerSimonian-Laird. A single study gives the fixed-effect result with a warning.
MetaResult pool_random_dl(const std::vector<EffectSize>& effects, double alpha = 0.05);
/// tau^2 maximizing the restricted likelihood of the normal-normal model.
MetaResult pool_random_reml(const std::vector<EffectSize>& effects, double alpha = 0.05);
MetaResult pool_random(const std::vector<EffectSize>& effects, Tau2Estimator estimator,
                       double alpha = 0.05);

/// (k-1) sum w / ((sum w)^2 - sum w^2), the typical within-study variance.
double typical_within_variance(const std::vector<EffectSize>& effects);
/// 100 tau^2 / (tau^2 + typical within variance); equals 100 (Q - df)/Q under DL.
double i2_from_tau2(const std::vector<EffectSize>& effects, double tau2);

/// "negligible" below 25%, then "small", "medium", "large" at 25/50/75%.
std::string_view heterogeneity_label(double i2);

struct SubgroupResult {
  std::vector<std::string> labels;
  std::vector<MetaResult> groups;
  /// pooled(groups[1]) - pooled(groups[0]) when there are exactly two groups.
  double difference = 0.0;
  double difference_se = 0.0;
  double difference_ci_low = 0.0;
  double difference_ci_high = 0.0;
  double difference_p = 1.0;
  bool has_difference = false;
};

/// Separate random-effects pool (and tau^2) per subgroup label, groups in
/// order of first appearance. Throws std::invalid_argument when an effect
/// has no label.
SubgroupResult subgroup_analysis(const std::vector<EffectSize>& effects,
                                 Tau2Estimator estimator = Tau2Estimator::dersimonian_laird,
                                 double alpha = 0.05);

struct Coefficient {
  double estimate = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double z = 0.0;
  double p_value = 1.0;
};

struct MetaRegressionResult {
  Coefficient intercept;
  Coefficient slope;
  /// Method-of-moments residual between-study variance.
  double tau2 = 0.0;
  /// Residual heterogeneity statistic under fixed-effect weights, k - 2 df.
  double q_residual = 0.0;
  std::size_t k = 0;
};

/// Mixed-effects meta-regression of d on moderator_x.
MetaRegressionResult meta_regression(const std::vector<EffectSize>& effects, double alpha = 0.05);

struct ForestRow {
  std::string label;
  double d = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double weight_percent = 0.0;
};

struct ForestPlotModel {
  std::vector<ForestRow> studies;
  ForestRow pooled;
  MetaModel model = MetaModel::random_dl;
  double q = 0.0;
  std::size_t q_df = 0;
  double q_p = 1.0;
  double i2 = 0.0;
  double tau2 = 0.0;
};

ForestPlotModel forest_model(const std::vector<EffectSize>& effects, const MetaResult& meta);

nlohmann::json to_json(const EffectSize& e);
nlohmann::json to_json(const MetaResult& m);
nlohmann::json to_json(const SubgroupResult& s);
nlohmann::json to_json(const MetaRegressionResult& m);
nlohmann::json to_json(const ForestPlotModel& f);

}  // namespace replimeta
