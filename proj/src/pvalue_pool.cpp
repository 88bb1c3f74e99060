#include "replimeta/pvalue_pool.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

#include "replimeta/distributions.hpp"

namespace replimeta {

namespace {

void check_ps(std::span<const double> ps) {
  if (ps.empty()) throw std::domain_error("p-value pooling needs at least one p-value");
  for (const double p : ps) {
    if (!(p > 0.0 && p <= 1.0)) {
      throw std::domain_error(fmt::format("p-value {} outside (0, 1]", p));
    }
  }
}

}  // namespace

std::string_view to_string(PoolMethod method) {
  return method == PoolMethod::fisher ? "fisher" : "stouffer";
}

PooledPValue fisher_pool(std::span<const double> one_sided_ps) {
  check_ps(one_sided_ps);
  PooledPValue out;
  out.method = PoolMethod::fisher;
  double s = 0.0;
  for (const double p : one_sided_ps) s += std::log(p);
  out.statistic = -2.0 * s;
  out.df = 2 * one_sided_ps.size();
  out.p_value = numerics::chisq_sf(out.statistic, static_cast<double>(out.df));
  return out;
}

PooledPValue stouffer_pool(std::span<const double> one_sided_ps, std::span<const double> weights) {
  check_ps(one_sided_ps);
  if (!weights.empty() && weights.size() != one_sided_ps.size()) {
    throw std::domain_error("stouffer: weights and p-values differ in length");
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < one_sided_ps.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    if (!(w >= 0.0)) throw std::domain_error("stouffer: weights must be non-negative");
    const double p = one_sided_ps[i];
    const double z = p >= 1.0 ? -std::numeric_limits<double>::infinity()
                              : numerics::normal_quantile(1.0 - p);
    if (w > 0.0) num += w * z;
    den += w * w;
  }
  if (den <= 0.0) throw std::domain_error("stouffer: all weights are zero");
  PooledPValue out;
  out.method = PoolMethod::stouffer;
  out.statistic = num / std::sqrt(den);
  out.df = 0;
  out.p_value = numerics::normal_sf(out.statistic);
  return out;
}

std::vector<double> clamp_p_values(std::span<const double> ps, std::vector<std::string>* warnings) {
  std::vector<double> out(ps.begin(), ps.end());
  for (auto& p : out) {
    if (p == 0.0) {
      p = std::numeric_limits<double>::denorm_min();
      if (warnings != nullptr) {
        warnings->push_back("a p-value of exactly 0 was clamped to the smallest positive double");
      }
    }
  }
  return out;
}

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::positive: return "positive";
    case Verdict::negative: return "negative";
    case Verdict::non_significant: return "non-significant";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "";
}

VoteCount vote_count(std::span<const TestResult> results, double alpha) {
  if (results.empty()) throw std::invalid_argument("vote count of no results");
  VoteCount v;
  v.alpha = alpha;
  for (const auto& r : results) {
    if (r.p_value < alpha) {
      (r.estimate > 0.0 ? v.significant_positive : v.significant_negative) += 1;
    } else {
      v.non_significant += 1;
    }
  }
  const std::size_t sig = v.significant_positive + v.significant_negative;
  if (sig == v.non_significant ||
      (v.significant_positive == v.significant_negative && v.non_significant < sig)) {
    v.verdict = Verdict::inconclusive;
  } else if (v.non_significant > sig) {
    v.verdict = Verdict::non_significant;
  } else {
    v.verdict = v.significant_positive > v.significant_negative ? Verdict::positive
                                                                : Verdict::negative;
  }
  v.verdict_text = fmt::format(
      "{} significant positive, {} significant negative, {} non-significant at alpha = {}: {}",
      v.significant_positive, v.significant_negative, v.non_significant, alpha,
      v.verdict == Verdict::inconclusive ? "no final claim can be made"
                                         : fmt::format("verdict {}", to_string(v.verdict)));
  return v;
}

}  // namespace replimeta
