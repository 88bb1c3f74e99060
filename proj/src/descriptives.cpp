#include "replimeta/descriptives.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace replimeta {

double mean(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("mean of an empty sample");
  double s = 0.0;
  for (const double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
  if (x.size() < 2) throw std::invalid_argument("variance needs at least 2 values");
  const double m = mean(x);
  double ss = 0.0;
  for (const double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

double sample_sd(std::span<const double> x) { return std::sqrt(sample_variance(x)); }

double median(std::span<const double> x) { return quantile(x, 0.5); }

double quantile(std::span<const double> x, double p) {
  if (x.empty()) throw std::invalid_argument("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile probability outside [0,1]");
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  const double h = (static_cast<double>(s.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

std::optional<double> pearson_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("correlation of unequal-length samples");
  if (x.size() < 2) throw std::invalid_argument("correlation needs at least 2 pairs");
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

SummaryRow summarize_replication(const Replication& replication, Warnings* warnings) {
  const auto control = replication.outcomes(Arm::control);
  const auto treatment = replication.outcomes(Arm::treatment);
  if (control.size() < 2 || treatment.size() < 2) {
    throw DataError(fmt::format("experiment '{}': each arm needs at least 2 observed outcomes",
                                replication.experiment_id()));
  }
  SummaryRow row;
  row.experiment_id = replication.experiment_id();
  row.design = replication.design();
  row.n_control = control.size();
  row.n_treatment = treatment.size();
  row.mean_control = mean(control);
  row.mean_treatment = mean(treatment);
  row.sd_control = sample_sd(control);
  row.sd_treatment = sample_sd(treatment);
  row.median_control = median(control);
  row.median_treatment = median(treatment);
  if (replication.design() == Design::within_subjects) {
    const auto pairs = complete_pairs(replication);
    row.corr = pearson_correlation(pairs.control, pairs.treatment);
    if (!row.corr && warnings != nullptr) {
      warnings->push_back(fmt::format(
          "experiment '{}': paired correlation undefined (an arm has zero variance)",
          replication.experiment_id()));
    }
  }
  return row;
}

std::vector<SummaryRow> summarize_replications(const ReplicationSet& data, Warnings* warnings) {
  std::vector<SummaryRow> rows;
  for (const auto& rep : data.replications()) rows.push_back(summarize_replication(rep, warnings));
  return rows;
}

std::vector<CovariateSummary> summarize_covariates(const CovariateTable& covariates,
                                                   Warnings* warnings) {
  std::vector<CovariateSummary> out;
  for (const auto& id : covariates.experiments()) {
    std::array<std::vector<double>, 4> values;
    for (const auto& row : covariates.rows()) {
      if (row.experiment_id != id) continue;
      for (const auto c : kAllCovariates) {
        values[static_cast<std::size_t>(c)].push_back(row.value(c));
      }
    }
    CovariateSummary s;
    s.experiment_id = id;
    s.n = values[0].size();
    for (std::size_t k = 0; k < 4; ++k) {
      s.mean[k] = mean(values[k]);
      s.sd[k] = values[k].size() > 1 ? sample_sd(values[k]) : 0.0;
    }
    if (s.n == 1 && warnings != nullptr) {
      warnings->push_back(
          fmt::format("experiment '{}': single participant, covariate sd reported as 0", id));
    }
    out.push_back(s);
  }
  return out;
}

ProfileSeries profile_series_covariates(const CovariateTable& covariates) {
  ProfileSeries series;
  series.label = "Experience";
  for (const auto c : kAllCovariates) series.categories.emplace_back(display_name(c));
  for (const auto& s : summarize_covariates(covariates)) {
    ProfileLine line{s.experiment_id, {}};
    for (const double m : s.mean) line.y.emplace_back(m);
    series.lines.push_back(std::move(line));
  }
  return series;
}

ProfileSeries profile_series_outcomes(const ReplicationSet& data, const TreatmentLevels& levels) {
  ProfileSeries series;
  series.label = data.outcome_name();
  series.categories = {levels.control, levels.treatment};
  for (const auto& rep : data.replications()) {
    ProfileLine line{rep.experiment_id(), {}};
    for (const Arm arm : {Arm::control, Arm::treatment}) {
      const auto y = rep.outcomes(arm);
      line.y.push_back(y.empty() ? std::nullopt : std::optional<double>(mean(y)));
    }
    series.lines.push_back(std::move(line));
  }
  return series;
}

}  // namespace replimeta
