#include "replimeta/ttest.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "replimeta/descriptives.hpp"
#include "replimeta/distributions.hpp"

namespace replimeta {

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("alpha must lie in (0, 1)");
}

TestResult finish(std::string id, double estimate, double se, double df,
                  const TTestOptions& options) {
  TestResult r;
  r.experiment_id = std::move(id);
  r.estimate = estimate;
  r.se = se;
  r.df = df;
  r.statistic = estimate / se;
  const double crit = std::isinf(df) ? numerics::normal_quantile(1.0 - options.alpha / 2.0)
                                     : numerics::t_quantile(1.0 - options.alpha / 2.0, df);
  r.ci_low = estimate - crit * se;
  r.ci_high = estimate + crit * se;
  r.sidedness = options.sidedness;
  r.alpha = options.alpha;
  r.p_value = t_p_value(r.statistic, df, options.sidedness);
  return r;
}

}  // namespace

std::string_view to_string(Sidedness s) {
  return s == Sidedness::two_sided ? "two_sided" : "one_sided_greater";
}

Sidedness parse_sidedness(std::string_view text) {
  if (text == "two_sided" || text == "two-sided") return Sidedness::two_sided;
  if (text == "one_sided_greater" || text == "one-sided" || text == "greater") {
    return Sidedness::one_sided_greater;
  }
  throw std::invalid_argument(fmt::format("unknown sidedness '{}'", text));
}

std::string_view to_string(PairedDfRule rule) {
  return rule == PairedDfRule::pairs_minus_one ? "pairs-minus-1" : "observations-minus-2";
}

PairedDfRule parse_paired_df_rule(std::string_view text) {
  if (text == "pairs-minus-1" || text == "pairs_minus_one") return PairedDfRule::pairs_minus_one;
  if (text == "observations-minus-2" || text == "observations_minus_two") {
    return PairedDfRule::observations_minus_two;
  }
  throw std::invalid_argument(fmt::format("unknown paired df rule '{}'", text));
}

double t_p_value(double statistic, double df, Sidedness sidedness) {
  if (statistic == 0.0) return sidedness == Sidedness::two_sided ? 1.0 : 0.5;
  const double upper = std::isinf(df) ? numerics::normal_sf(statistic)
                                      : numerics::t_sf(statistic, df);
  if (sidedness == Sidedness::one_sided_greater) return upper;
  return std::min(1.0, numerics::two_sided_p(statistic, df));
}

TestResult paired_t_test(const PairedSample& sample, const TTestOptions& options) {
  check_alpha(options.alpha);
  const std::size_t n = sample.differences.size();
  if (n < 2) throw std::domain_error("paired t-test needs at least 2 pairs");
  const double sd = sample_sd(sample.differences);
  if (!(sd > 0.0)) {
    throw std::domain_error(
        fmt::format("experiment '{}': differences have zero variance", sample.experiment_id));
  }
  const double nn = static_cast<double>(n);
  const double df = options.paired_df == PairedDfRule::pairs_minus_one ? nn - 1.0 : 2.0 * nn - 2.0;
  return finish(sample.experiment_id, mean(sample.differences), sd / std::sqrt(nn), df, options);
}

TestResult independent_t_test(std::span<const double> control, std::span<const double> treatment,
                              const TTestOptions& options) {
  check_alpha(options.alpha);
  if (control.size() < 2 || treatment.size() < 2) {
    throw std::domain_error("independent t-test needs at least 2 observations per arm");
  }
  const double n1 = static_cast<double>(control.size());
  const double n2 = static_cast<double>(treatment.size());
  const double v1 = sample_variance(control);
  const double v2 = sample_variance(treatment);
  if (v1 <= 0.0 && v2 <= 0.0) throw std::domain_error("both arms have zero variance");
  const double estimate = mean(treatment) - mean(control);
  double se = 0.0;
  double df = 0.0;
  if (options.welch) {
    const double a = v1 / n1;
    const double b = v2 / n2;
    se = std::sqrt(a + b);
    df = (a + b) * (a + b) / (a * a / (n1 - 1.0) + b * b / (n2 - 1.0));
  } else {
    df = n1 + n2 - 2.0;
    const double pooled = ((n1 - 1.0) * v1 + (n2 - 1.0) * v2) / df;
    se = std::sqrt(pooled * (1.0 / n1 + 1.0 / n2));
  }
  return finish("", estimate, se, df, options);
}

TestResult individual_analysis(const Replication& replication, const TTestOptions& options) {
  if (replication.design() == Design::within_subjects) {
    return paired_t_test(complete_pairs(replication), options);
  }
  const auto c = replication.outcomes(Arm::control);
  const auto t = replication.outcomes(Arm::treatment);
  auto r = independent_t_test(c, t, options);
  r.experiment_id = replication.experiment_id();
  return r;
}

}  // namespace replimeta
