#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "replimeta/data.hpp"

namespace replimeta {

/// Standardized mean difference (treatment - control) with its sampling variance.
struct EffectSize {
  std::string experiment_id;
  double d = 0.0;
  double variance = 0.0;
  std::size_t n_effective = 0;
  /// Degrees of freedom used by the small-sample correction.
  double df = 0.0;
  bool corrected = false;
  std::optional<std::string> subgroup_label;
  std::optional<double> moderator_x;
};

/// Cohen's d for an AB repeated-measures design, standardized by the within-
/// participant sd recovered from the sd of the differences:
///   s_diff^2   = sd_c^2 + sd_t^2 - 2 r sd_c sd_t
///   s_within   = s_diff / sqrt(2 (1 - r))
///   d          = (mean_t - mean_c) / s_within
///   var(d)     = (1/n + d^2 / (2n)) * 2 (1 - r)
/// n defaults to min(n_control, n_treatment), the number of complete pairs
/// when the row was computed from complete pairs.
///
/// Worked example (data/illustrative/summary.csv, the unit-test oracle):
///
///   experiment  n   s_diff   s_within  d       var(d)
///   F-Secure H  6   31.8226  35.1421   0.2709  0.14168
///   F-Secure K  11  32.6060  30.2739   0.4377  0.11555
///   F-Secure O  7   27.2912  27.8540   1.8999  0.38466
///   UPV         29  35.1991  34.1884   1.2806  0.06652
///
/// Fixed-effect weights w = 1/var give the pooled 0.8964 and Q = 9.4189 on
/// 3 df; C = sum w - sum w^2 / sum w = 22.6246, so the DerSimonian-Laird
/// tau^2 = (Q - 3) / C = 0.2837. Re-weighting with 1/(var + tau^2) gives the
/// random-effects d = 0.8941 (se 0.3296) and I^2 = 100 (Q - 3)/Q = 68.15%.
EffectSize repeated_measures_d(const SummaryRow& row, std::optional<std::size_t> n_pairs = {});

/// Cohen's d on the pooled sd with var(d) = (n_c+n_t)/(n_c n_t) + d^2/(2(n_c+n_t)).
EffectSize between_subjects_d(const SummaryRow& row);

/// Multiplies d by J = 1 - 3/(4 df - 1) and the variance by J^2. Throws
/// std::domain_error for df <= 1 and std::logic_error when already corrected.
EffectSize hedges_correction(const EffectSize& e, double df);
inline EffectSize hedges_correction(const EffectSize& e) { return hedges_correction(e, e.df); }

struct EffectSizeOptions {
  bool hedges = false;
};

/// Dispatches on the row's design.
EffectSize effect_size(const SummaryRow& row, const EffectSizeOptions& options = {});
std::vector<EffectSize> effect_sizes(const std::vector<SummaryRow>& rows,
                                     const EffectSizeOptions& options = {});

/// Summary statistics restricted to complete pairs (within-subjects) or to
/// all observed outcomes (between-subjects); the input for AD pooling.
SummaryRow effect_size_inputs(const Replication& replication);
EffectSize effect_size(const Replication& replication, const EffectSizeOptions& options = {});

}  // namespace replimeta
