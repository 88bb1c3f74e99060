#include "replimeta/meta.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "replimeta/distributions.hpp"
#include "replimeta/linalg.hpp"

namespace replimeta {

namespace {

void check(const std::vector<EffectSize>& effects) {
  if (effects.empty()) throw std::invalid_argument("meta-analysis of an empty set of effects");
  for (const auto& e : effects) {
    if (!(e.variance > 0.0) || !std::isfinite(e.variance) || !std::isfinite(e.d)) {
      throw std::invalid_argument(
          fmt::format("'{}': effect size needs a finite d and a positive variance",
                      e.experiment_id));
    }
  }
}

double z_crit(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("alpha must lie in (0, 1)");
  return numerics::normal_quantile(1.0 - alpha / 2.0);
}

struct FixedStats {
  double sum_w = 0.0;
  double sum_w2 = 0.0;
  double pooled = 0.0;
  double q = 0.0;
};

FixedStats fixed_stats(const std::vector<EffectSize>& effects) {
  FixedStats s;
  double swd = 0.0;
  for (const auto& e : effects) {
    const double w = 1.0 / e.variance;
    s.sum_w += w;
    s.sum_w2 += w * w;
    swd += w * e.d;
  }
  s.pooled = swd / s.sum_w;
  for (const auto& e : effects) s.q += (e.d - s.pooled) * (e.d - s.pooled) / e.variance;
  return s;
}

MetaResult pool_with_tau2(const std::vector<EffectSize>& effects, double tau2, MetaModel model,
                          double alpha) {
  const auto fs = fixed_stats(effects);
  MetaResult m;
  m.model = model;
  m.k = effects.size();
  m.alpha = alpha;
  m.tau2 = tau2;
  m.q = fs.q;
  m.q_df = m.k - 1;
  m.q_p = m.q_df > 0 ? numerics::chisq_sf(std::max(0.0, fs.q), static_cast<double>(m.q_df)) : 1.0;

  double sw = 0.0, swd = 0.0;
  for (const auto& e : effects) {
    const double w = 1.0 / (e.variance + tau2);
    m.weights.push_back(w);
    sw += w;
    swd += w * e.d;
  }
  for (auto& w : m.weights) w /= sw;
  m.pooled = swd / sw;
  m.se = 1.0 / std::sqrt(sw);
  const double zc = z_crit(alpha);
  m.ci_low = m.pooled - zc * m.se;
  m.ci_high = m.pooled + zc * m.se;
  m.z = m.pooled / m.se;
  m.p_value = numerics::two_sided_p(m.z, std::numeric_limits<double>::infinity());
  if (model == MetaModel::random_dl || model == MetaModel::fixed) {
    m.i2 = m.q > 0.0 ? std::max(0.0, (m.q - static_cast<double>(m.q_df)) / m.q) * 100.0 : 0.0;
  } else {
    m.i2 = i2_from_tau2(effects, tau2);
  }
  return m;
}

/// Restricted log-likelihood of the normal-normal model, up to a constant.
double reml_loglik(const std::vector<EffectSize>& effects, double tau2) {
  double sw = 0.0, swd = 0.0, slog = 0.0;
  for (const auto& e : effects) {
    const double w = 1.0 / (e.variance + tau2);
    sw += w;
    swd += w * e.d;
    slog += std::log(e.variance + tau2);
  }
  const double mu = swd / sw;
  double rss = 0.0;
  for (const auto& e : effects) rss += (e.d - mu) * (e.d - mu) / (e.variance + tau2);
  return -0.5 * (slog + std::log(sw) + rss);
}

}  // namespace

std::string_view to_string(MetaModel model) {
  switch (model) {
    case MetaModel::fixed: return "fixed";
    case MetaModel::random_dl: return "random_dl";
    case MetaModel::random_reml: return "random_reml";
  }
  return "";
}

std::string_view to_string(Tau2Estimator estimator) {
  return estimator == Tau2Estimator::dersimonian_laird ? "dl" : "reml";
}

Tau2Estimator parse_tau2_estimator(std::string_view text) {
  if (text == "dl" || text == "DL" || text == "dersimonian_laird") {
    return Tau2Estimator::dersimonian_laird;
  }
  if (text == "reml" || text == "REML") return Tau2Estimator::reml;
  throw std::invalid_argument(fmt::format("unknown tau2 estimator '{}' (dl or reml)", text));
}

double typical_within_variance(const std::vector<EffectSize>& effects) {
  check(effects);
  const auto fs = fixed_stats(effects);
  const double k = static_cast<double>(effects.size());
  const double denom = fs.sum_w * fs.sum_w - fs.sum_w2;
  if (denom <= 0.0) return 1.0 / fs.sum_w;
  return (k - 1.0) * fs.sum_w / denom;
}

double i2_from_tau2(const std::vector<EffectSize>& effects, double tau2) {
  if (effects.size() < 2 || tau2 <= 0.0) return 0.0;
  const double s2 = typical_within_variance(effects);
  return 100.0 * tau2 / (tau2 + s2);
}

MetaResult pool_fixed(const std::vector<EffectSize>& effects, double alpha) {
  check(effects);
  return pool_with_tau2(effects, 0.0, MetaModel::fixed, alpha);
}

MetaResult pool_random_dl(const std::vector<EffectSize>& effects, double alpha) {
  check(effects);
  const auto fs = fixed_stats(effects);
  const double df = static_cast<double>(effects.size()) - 1.0;
  const double c = fs.sum_w - fs.sum_w2 / fs.sum_w;
  const double tau2 = (effects.size() > 1 && c > 0.0) ? std::max(0.0, (fs.q - df) / c) : 0.0;
  auto m = pool_with_tau2(effects, tau2, MetaModel::random_dl, alpha);
  if (effects.size() == 1) {
    m.warnings.push_back("single study: random-effects pool equals the fixed-effect result");
  }
  return m;
}

MetaResult pool_random_reml(const std::vector<EffectSize>& effects, double alpha) {
  check(effects);
  if (effects.size() == 1) {
    auto m = pool_with_tau2(effects, 0.0, MetaModel::random_reml, alpha);
    m.warnings.push_back("single study: random-effects pool equals the fixed-effect result");
    return m;
  }
  // Fisher scoring on tau^2 from the DL value, step-halving to keep the
  // restricted likelihood non-decreasing; truncated at 0.
  double tau2 = pool_random_dl(effects, alpha).tau2;
  double ll = reml_loglik(effects, tau2);
  for (int iter = 0; iter < 500; ++iter) {
    double sw = 0.0, sw2 = 0.0, sw3 = 0.0, swd = 0.0;
    for (const auto& e : effects) {
      const double w = 1.0 / (e.variance + tau2);
      sw += w;
      sw2 += w * w;
      sw3 += w * w * w;
      swd += w * e.d;
    }
    const double mu = swd / sw;
    double score = 0.0;
    for (const auto& e : effects) {
      const double w = 1.0 / (e.variance + tau2);
      score += w * w * (e.d - mu) * (e.d - mu);
    }
    score = 0.5 * (score - sw + sw2 / sw);
    const double info = 0.5 * (sw2 - 2.0 * sw3 / sw + sw2 * sw2 / (sw * sw));
    if (!(info > 0.0)) break;
    double step = score / info;
    double next = std::max(0.0, tau2 + step);
    double ll_next = reml_loglik(effects, next);
    while (ll_next < ll - 1e-15 && std::fabs(next - tau2) > 1e-14) {
      step *= 0.5;
      next = std::max(0.0, tau2 + step);
      ll_next = reml_loglik(effects, next);
    }
    const bool done = std::fabs(next - tau2) < 1e-12 * std::max(1.0, tau2);
    tau2 = next;
    ll = ll_next;
    if (done) break;
  }
  return pool_with_tau2(effects, tau2, MetaModel::random_reml, alpha);
}

MetaResult pool_random(const std::vector<EffectSize>& effects, Tau2Estimator estimator,
                       double alpha) {
  return estimator == Tau2Estimator::reml ? pool_random_reml(effects, alpha)
                                          : pool_random_dl(effects, alpha);
}

std::string_view heterogeneity_label(double i2) {
  if (i2 >= 75.0) return "large";
  if (i2 >= 50.0) return "medium";
  if (i2 >= 25.0) return "small";
  return "negligible";
}

SubgroupResult subgroup_analysis(const std::vector<EffectSize>& effects, Tau2Estimator estimator,
                                 double alpha) {
  check(effects);
  SubgroupResult out;
  std::vector<std::vector<EffectSize>> members;
  for (const auto& e : effects) {
    if (!e.subgroup_label) {
      throw std::invalid_argument(fmt::format("'{}' has no subgroup label", e.experiment_id));
    }
    const auto it = std::find(out.labels.begin(), out.labels.end(), *e.subgroup_label);
    if (it == out.labels.end()) {
      out.labels.push_back(*e.subgroup_label);
      members.push_back({e});
    } else {
      members[static_cast<std::size_t>(it - out.labels.begin())].push_back(e);
    }
  }
  for (const auto& group : members) out.groups.push_back(pool_random(group, estimator, alpha));
  if (out.groups.size() == 2) {
    out.has_difference = true;
    out.difference = out.groups[1].pooled - out.groups[0].pooled;
    out.difference_se = std::hypot(out.groups[0].se, out.groups[1].se);
    const double zc = z_crit(alpha);
    out.difference_ci_low = out.difference - zc * out.difference_se;
    out.difference_ci_high = out.difference + zc * out.difference_se;
    out.difference_p = numerics::two_sided_p(out.difference / out.difference_se,
                                             std::numeric_limits<double>::infinity());
  }
  return out;
}

MetaRegressionResult meta_regression(const std::vector<EffectSize>& effects, double alpha) {
  check(effects);
  const std::size_t k = effects.size();
  if (k < 3) throw std::invalid_argument("meta-regression needs at least 3 effects");
  numerics::MatrixXd x(k, 2);
  numerics::VectorXd y(k), w(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (!effects[i].moderator_x) {
      throw std::invalid_argument(
          fmt::format("'{}' has no moderator value", effects[i].experiment_id));
    }
    x(i, 0) = 1.0;
    x(i, 1) = *effects[i].moderator_x;
    y(i) = effects[i].d;
    w(i) = 1.0 / effects[i].variance;
  }
  if (x.col(1).maxCoeff() - x.col(1).minCoeff() <= 0.0) {
    throw std::invalid_argument("meta-regression moderator is constant");
  }
  const auto fe = numerics::wls_solve(x, y, w);
  // tr(P) with P = W - W X (X'WX)^-1 X'W.
  const numerics::MatrixXd wx = w.asDiagonal() * x;
  const double trace_p =
      w.sum() - (fe.unscaled_covariance * (wx.transpose() * wx)).trace();
  const double df = static_cast<double>(k) - 2.0;
  MetaRegressionResult out;
  out.k = k;
  out.q_residual = fe.weighted_rss;
  out.tau2 = trace_p > 0.0 ? std::max(0.0, (fe.weighted_rss - df) / trace_p) : 0.0;

  numerics::VectorXd wr(k);
  for (std::size_t i = 0; i < k; ++i) wr(i) = 1.0 / (effects[i].variance + out.tau2);
  const auto re = numerics::wls_solve(x, y, wr);
  const double zc = z_crit(alpha);
  auto coef = [&](int j) {
    Coefficient c;
    c.estimate = re.coefficients(j);
    c.se = std::sqrt(re.unscaled_covariance(j, j));
    c.ci_low = c.estimate - zc * c.se;
    c.ci_high = c.estimate + zc * c.se;
    c.z = c.estimate / c.se;
    c.p_value = numerics::two_sided_p(c.z, std::numeric_limits<double>::infinity());
    return c;
  };
  out.intercept = coef(0);
  out.slope = coef(1);
  return out;
}

ForestPlotModel forest_model(const std::vector<EffectSize>& effects, const MetaResult& meta) {
  if (effects.size() != meta.weights.size()) {
    throw std::invalid_argument("forest model: effects and meta-analysis do not match");
  }
  const double zc = z_crit(meta.alpha);
  ForestPlotModel f;
  for (std::size_t i = 0; i < effects.size(); ++i) {
    const auto& e = effects[i];
    const double half = zc * std::sqrt(e.variance);
    f.studies.push_back({e.experiment_id, e.d, e.d - half, e.d + half, 100.0 * meta.weights[i]});
  }
  f.pooled = {"Pooled", meta.pooled, meta.ci_low, meta.ci_high, 100.0};
  f.model = meta.model;
  f.q = meta.q;
  f.q_df = meta.q_df;
  f.q_p = meta.q_p;
  f.i2 = meta.i2;
  f.tau2 = meta.tau2;
  return f;
}

nlohmann::json to_json(const EffectSize& e) {
  nlohmann::json j = {{"experiment_id", e.experiment_id}, {"d", e.d},
                      {"variance", e.variance},           {"n_effective", e.n_effective},
                      {"corrected", e.corrected}};
  if (e.subgroup_label) j["subgroup"] = *e.subgroup_label;
  if (e.moderator_x) j["moderator_x"] = *e.moderator_x;
  return j;
}

nlohmann::json to_json(const MetaResult& m) {
  return {{"model", to_string(m.model)},
          {"k", m.k},
          {"pooled", m.pooled},
          {"se", m.se},
          {"ci", {m.ci_low, m.ci_high}},
          {"z", m.z},
          {"p_value", m.p_value},
          {"tau2", m.tau2},
          {"q", m.q},
          {"q_df", m.q_df},
          {"q_p", m.q_p},
          {"i2", m.i2},
          {"heterogeneity", heterogeneity_label(m.i2)},
          {"weights", m.weights},
          {"alpha", m.alpha},
          {"warnings", m.warnings}};
}

nlohmann::json to_json(const SubgroupResult& s) {
  nlohmann::json groups = nlohmann::json::array();
  for (std::size_t i = 0; i < s.groups.size(); ++i) {
    auto g = to_json(s.groups[i]);
    g["label"] = s.labels[i];
    groups.push_back(std::move(g));
  }
  nlohmann::json j = {{"groups", groups}};
  if (s.has_difference) {
    j["difference"] = {{"estimate", s.difference},
                       {"se", s.difference_se},
                       {"ci", {s.difference_ci_low, s.difference_ci_high}},
                       {"p_value", s.difference_p}};
  }
  return j;
}

namespace {
nlohmann::json coef_json(const Coefficient& c) {
  return {{"estimate", c.estimate}, {"se", c.se},   {"ci", {c.ci_low, c.ci_high}},
          {"z", c.z},               {"p_value", c.p_value}};
}
}  // namespace

nlohmann::json to_json(const MetaRegressionResult& m) {
  return {{"k", m.k},
          {"intercept", coef_json(m.intercept)},
          {"slope", coef_json(m.slope)},
          {"tau2", m.tau2},
          {"q_residual", m.q_residual}};
}

nlohmann::json to_json(const ForestPlotModel& f) {
  auto row = [](const ForestRow& r) {
    return nlohmann::json{{"label", r.label},
                          {"d", r.d},
                          {"ci", {r.ci_low, r.ci_high}},
                          {"weight_percent", r.weight_percent}};
  };
  nlohmann::json studies = nlohmann::json::array();
  for (const auto& s : f.studies) studies.push_back(row(s));
  return {{"studies", studies},
          {"pooled", row(f.pooled)},
          {"model", to_string(f.model)},
          {"heterogeneity",
           {{"q", f.q}, {"df", f.q_df}, {"p", f.q_p}, {"i2", f.i2}, {"tau2", f.tau2}}}};
}

}  // namespace replimeta
