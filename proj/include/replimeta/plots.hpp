#pragma once

#include <optional>
#include <string>
#include <vector>

#include "replimeta/descriptives.hpp"
#include "replimeta/lmm.hpp"
#include "replimeta/meta.hpp"
#include "replimeta/svg.hpp"

namespace replimeta {

struct PlotOptions {
  double width = 900.0;
  double height = 500.0;
  std::string title;
};

/// Square markers with area proportional to weight, CI whiskers, pooled
/// diamond, zero line and heterogeneity caption. Whiskers leaving
/// [x_min, x_max] are clipped and end in an arrowhead.
struct ForestOptions : PlotOptions {
  std::optional<double> x_min;
  std::optional<double> x_max;
  std::string axis_label = "Standardized mean difference (d)";
};
svg::Document render_forest(const ForestPlotModel& model, const ForestOptions& options = {});

svg::Document render_profile(const ProfileSeries& series, const PlotOptions& options = {});

struct BoxStats {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  /// Most extreme observations within 1.5 IQR of the box.
  double whisker_low = 0.0;
  double whisker_high = 0.0;
  std::vector<double> outliers;
};
BoxStats box_stats(const std::vector<double>& values);

/// Silverman's rule of thumb, 0.9 min(sd, IQR/1.34) n^(-1/5); 0 for constant data.
double silverman_bandwidth(const std::vector<double>& values);
double gaussian_kde(const std::vector<double>& values, double bandwidth, double at);

struct BoxGroup {
  std::string experiment_id;
  std::string arm_label;
  std::vector<double> values;
};
/// Groups for every (experiment, arm) of the data, non-missing outcomes only.
std::vector<BoxGroup> box_groups(const ReplicationSet& data, const TreatmentLevels& levels = {});
svg::Document render_box_violin(const std::vector<BoxGroup>& groups,
                                const PlotOptions& options = {});

struct InteractionPanel {
  std::string label;
  /// Treatment effect at x = center.
  double effect_at_center = 0.0;
  double center = 0.0;
  double slope = 0.0;
  double p_value = 1.0;
};
/// Effect line of a participant-level moderator fit.
InteractionPanel interaction_panel(const LmmFit& fit, std::string label);
/// One panel per moderator: fitted treatment effect over covariate values 1..4.
svg::Document render_interactions(const std::vector<InteractionPanel>& panels,
                                  const PlotOptions& options = {});

}  // namespace replimeta
