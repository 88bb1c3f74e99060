#include "replimeta/effect_size.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "replimeta/descriptives.hpp"

namespace replimeta {

EffectSize repeated_measures_d(const SummaryRow& row, std::optional<std::size_t> n_pairs) {
  if (row.design != Design::within_subjects || !row.corr) {
    throw std::domain_error(
        fmt::format("'{}': repeated-measures d needs a within-subjects row with corr",
                    row.experiment_id));
  }
  const double r = *row.corr;
  if (!(r < 1.0)) {
    throw std::domain_error(fmt::format("'{}': corr = 1 leaves no within-participant variance",
                                        row.experiment_id));
  }
  const std::size_t n = n_pairs.value_or(std::min(row.n_control, row.n_treatment));
  if (n < 2) throw std::domain_error(fmt::format("'{}': need n >= 2 pairs", row.experiment_id));

  const double sc = row.sd_control;
  const double st = row.sd_treatment;
  const double s_diff2 = std::max(0.0, sc * sc + st * st - 2.0 * r * sc * st);
  const double s_within = std::sqrt(s_diff2 / (2.0 * (1.0 - r)));
  if (!(s_within > 0.0)) {
    throw std::domain_error(fmt::format("'{}': zero within-participant sd", row.experiment_id));
  }
  const double nn = static_cast<double>(n);
  EffectSize e;
  e.experiment_id = row.experiment_id;
  e.d = (row.mean_treatment - row.mean_control) / s_within;
  e.variance = (1.0 / nn + e.d * e.d / (2.0 * nn)) * 2.0 * (1.0 - r);
  e.n_effective = n;
  e.df = nn - 1.0;
  return e;
}

EffectSize between_subjects_d(const SummaryRow& row) {
  if (row.design != Design::between_subjects) {
    throw std::domain_error(
        fmt::format("'{}': between-subjects d needs a between-subjects row", row.experiment_id));
  }
  const double nc = static_cast<double>(row.n_control);
  const double nt = static_cast<double>(row.n_treatment);
  if (nc < 2 || nt < 2) throw std::domain_error("between-subjects d needs n >= 2 per arm");
  const double pooled = std::sqrt(((nc - 1.0) * row.sd_control * row.sd_control +
                                   (nt - 1.0) * row.sd_treatment * row.sd_treatment) /
                                  (nc + nt - 2.0));
  if (!(pooled > 0.0)) {
    throw std::domain_error(fmt::format("'{}': pooled sd is zero", row.experiment_id));
  }
  EffectSize e;
  e.experiment_id = row.experiment_id;
  e.d = (row.mean_treatment - row.mean_control) / pooled;
  e.variance = (nc + nt) / (nc * nt) + e.d * e.d / (2.0 * (nc + nt));
  e.n_effective = row.n_control + row.n_treatment;
  e.df = nc + nt - 2.0;
  return e;
}

EffectSize hedges_correction(const EffectSize& e, double df) {
  if (e.corrected) {
    throw std::logic_error(fmt::format("'{}': small-sample correction already applied",
                                       e.experiment_id));
  }
  if (!(df > 1.0)) throw std::domain_error("hedges correction needs df > 1");
  const double j = 1.0 - 3.0 / (4.0 * df - 1.0);
  EffectSize g = e;
  g.d *= j;
  g.variance *= j * j;
  g.corrected = true;
  return g;
}

EffectSize effect_size(const SummaryRow& row, const EffectSizeOptions& options) {
  EffectSize e = row.design == Design::within_subjects ? repeated_measures_d(row)
                                                       : between_subjects_d(row);
  return options.hedges ? hedges_correction(e) : e;
}

std::vector<EffectSize> effect_sizes(const std::vector<SummaryRow>& rows,
                                     const EffectSizeOptions& options) {
  std::vector<EffectSize> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(effect_size(row, options));
  return out;
}

SummaryRow effect_size_inputs(const Replication& replication) {
  if (replication.design() == Design::between_subjects) return summarize_replication(replication);
  const auto pairs = complete_pairs(replication);
  SummaryRow row;
  row.experiment_id = replication.experiment_id();
  row.design = Design::within_subjects;
  row.n_control = row.n_treatment = pairs.n_pairs;
  row.mean_control = mean(pairs.control);
  row.mean_treatment = mean(pairs.treatment);
  row.sd_control = sample_sd(pairs.control);
  row.sd_treatment = sample_sd(pairs.treatment);
  row.corr = pearson_correlation(pairs.control, pairs.treatment);
  if (!row.corr) {
    throw std::domain_error(fmt::format("'{}': paired correlation undefined",
                                        replication.experiment_id()));
  }
  return row;
}

EffectSize effect_size(const Replication& replication, const EffectSizeOptions& options) {
  return effect_size(effect_size_inputs(replication), options);
}

}  // namespace replimeta
