#pragma once

// p-value pooling and vote counting. Kept for comparison only: neither
// yields an effect size, so every result carries kGuideline1Warning.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "replimeta/ttest.hpp"

namespace replimeta {

inline constexpr std::string_view kGuideline1Warning =
    "Guideline 1: avoid narrative synthesis and aggregation of p-values. These summaries give "
    "no joint effect size and weight every replication alike; use AD and IPD-S together.";

enum class PoolMethod { fisher, stouffer };
std::string_view to_string(PoolMethod method);

struct PooledPValue {
  PoolMethod method = PoolMethod::fisher;
  /// Chi-square (Fisher) or z (Stouffer).
  double statistic = 0.0;
  /// 2k for Fisher, 0 for Stouffer.
  std::size_t df = 0;
  double p_value = 1.0;
  std::string warning{kGuideline1Warning};
};

/// -2 sum ln p on 2k df. Inputs must be co-directional one-sided p-values in
/// (0, 1]; throws std::domain_error otherwise.
PooledPValue fisher_pool(std::span<const double> one_sided_ps);
/// sum w_i z_i / sqrt(sum w_i^2), z_i = Phi^-1(1 - p_i). Unweighted when empty.
PooledPValue stouffer_pool(std::span<const double> one_sided_ps,
                           std::span<const double> weights = {});

/// Replaces p = 0 by the smallest positive double and notes it in `warnings`.
std::vector<double> clamp_p_values(std::span<const double> ps, std::vector<std::string>* warnings);

enum class Verdict { positive, negative, non_significant, inconclusive };
std::string_view to_string(Verdict verdict);

struct VoteCount {
  std::size_t significant_positive = 0;
  std::size_t significant_negative = 0;
  std::size_t non_significant = 0;
  double alpha = 0.05;
  Verdict verdict = Verdict::non_significant;
  std::string verdict_text;
  std::string warning{kGuideline1Warning};
};

/// Classifies each result by its own p-value and estimate sign. A tie between
/// significant and non-significant results (or between the two directions)
/// is inconclusive; otherwise the majority class wins.
VoteCount vote_count(std::span<const TestResult> results, double alpha = 0.05);

}  // namespace replimeta
