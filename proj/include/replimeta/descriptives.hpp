#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "replimeta/data.hpp"

namespace replimeta {

/// Non-fatal notes collected while computing; callers may forward them to a report.
using Warnings = std::vector<std::string>;

// Elementary sample statistics. All throw std::invalid_argument on empty
// input (or fewer than 2 values where a denominator n-1 is involved).
double mean(std::span<const double> x);
double sample_variance(std::span<const double> x);
double sample_sd(std::span<const double> x);
/// Even lengths take the midpoint of the two central order statistics.
double median(std::span<const double> x);
/// Linear interpolation between order statistics (Hyndman-Fan type 7).
double quantile(std::span<const double> x, double p);
/// Pearson correlation; empty when either sample has zero variance.
std::optional<double> pearson_correlation(std::span<const double> x, std::span<const double> y);

/// n, mean, sd (n-1 denominator) and median per arm over non-missing outcomes.
/// Within-subjects replications also get the complete-pair correlation; when
/// it is undefined the field is left empty and a warning is added.
SummaryRow summarize_replication(const Replication& replication, Warnings* warnings = nullptr);
std::vector<SummaryRow> summarize_replications(const ReplicationSet& data,
                                               Warnings* warnings = nullptr);

struct CovariateSummary {
  std::string experiment_id;
  std::size_t n = 0;
  std::array<double, 4> mean{};
  std::array<double, 4> sd{};

  double mean_of(Covariate c) const { return mean[static_cast<std::size_t>(c)]; }
  double sd_of(Covariate c) const { return sd[static_cast<std::size_t>(c)]; }
};

/// One summary per experiment, in first-appearance order. An experiment with a
/// single participant reports sd = 0 and adds a warning.
std::vector<CovariateSummary> summarize_covariates(const CovariateTable& covariates,
                                                   Warnings* warnings = nullptr);

struct ProfileLine {
  std::string experiment_id;
  /// One value per category; empty when the experiment has no data there.
  std::vector<std::optional<double>> y;
};

struct ProfileSeries {
  std::string label;
  std::vector<std::string> categories;
  std::vector<ProfileLine> lines;
};

/// Covariate means per experiment over (programming, java, unit testing, JUnit).
ProfileSeries profile_series_covariates(const CovariateTable& covariates);
/// Arm means per experiment over (control, treatment).
ProfileSeries profile_series_outcomes(const ReplicationSet& data,
                                      const TreatmentLevels& levels = {});

}  // namespace replimeta
