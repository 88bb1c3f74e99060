#pragma once

#include <span>
#include <string>
#include <string_view>

#include "replimeta/data.hpp"

namespace replimeta {

enum class Sidedness { two_sided, one_sided_greater };

std::string_view to_string(Sidedness s);
Sidedness parse_sidedness(std::string_view text);

/// Degrees of freedom for the dependent t-test.
///   pairs_minus_one      n_pairs - 1 (the textbook dependent t-test)
///   observations_minus_two  2 n_pairs - 2 (paired standard error with the df of
///                           an unpaired two-sample comparison)
enum class PairedDfRule { pairs_minus_one, observations_minus_two };

std::string_view to_string(PairedDfRule rule);
PairedDfRule parse_paired_df_rule(std::string_view text);

struct TestResult {
  std::string experiment_id;
  /// mean(treatment) - mean(control)
  double estimate = 0.0;
  double se = 0.0;
  double statistic = 0.0;
  double df = 0.0;
  /// Two-sided (1 - alpha) interval regardless of sidedness.
  double ci_low = 0.0;
  double ci_high = 0.0;
  double p_value = 1.0;
  Sidedness sidedness = Sidedness::two_sided;
  double alpha = 0.05;
};

struct TTestOptions {
  Sidedness sidedness = Sidedness::two_sided;
  double alpha = 0.05;
  PairedDfRule paired_df = PairedDfRule::pairs_minus_one;
  /// Welch-Satterthwaite df for independent samples; pooled variance otherwise.
  bool welch = true;
};

/// Throws std::domain_error when the differences have zero variance.
TestResult paired_t_test(const PairedSample& sample, const TTestOptions& options = {});
TestResult independent_t_test(std::span<const double> control, std::span<const double> treatment,
                              const TTestOptions& options = {});

/// Dependent t-test on complete pairs for within-subjects replications,
/// independent t-test otherwise.
TestResult individual_analysis(const Replication& replication, const TTestOptions& options = {});

/// p-value of a t (or z when df is infinite) statistic under the given sidedness.
double t_p_value(double statistic, double df, Sidedness sidedness);

}  // namespace replimeta
