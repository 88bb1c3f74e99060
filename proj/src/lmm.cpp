#include "replimeta/lmm.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

#include "replimeta/distributions.hpp"
#include "replimeta/linalg.hpp"
#include "replimeta/optimize.hpp"

namespace replimeta {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Row {
  double y;
  double t;
  std::size_t experiment;
  std::size_t participant;
  const std::string* experiment_id;
  const std::string* participant_id;
};

using Keep = std::function<bool(const std::string&, const std::string&)>;

/// Non-missing rows in file order, with dense experiment/participant indices.
std::vector<Row> collect_rows(const ReplicationSet& data, MissingPolicy missing, const Keep& keep,
                              std::vector<std::string>& experiment_ids,
                              std::size_t& n_participants) {
  std::vector<Row> rows;
  std::map<std::pair<std::string, std::string>, std::size_t> pidx;
  for (const auto& rep : data.replications()) {
    std::set<std::string> paired;
    if (missing == MissingPolicy::complete_pairs && rep.design() == Design::within_subjects) {
      std::map<std::string, int> arms;
      for (const auto& o : rep.observations()) {
        if (o.outcome) ++arms[o.participant_id];
      }
      for (const auto& [pid, count] : arms) {
        if (count == 2) paired.insert(pid);
      }
    }
    bool any = false;
    const std::size_t j = experiment_ids.size();
    for (const auto& o : rep.observations()) {
      if (!o.outcome) continue;
      if (missing == MissingPolicy::complete_pairs && rep.design() == Design::within_subjects &&
          !paired.contains(o.participant_id)) {
        continue;
      }
      if (keep && !keep(o.experiment_id, o.participant_id)) continue;
      const auto key = std::make_pair(o.experiment_id, o.participant_id);
      auto it = pidx.find(key);
      if (it == pidx.end()) it = pidx.emplace(key, pidx.size()).first;
      rows.push_back({*o.outcome, o.arm == Arm::treatment ? 1.0 : 0.0, j, it->second,
                      &o.experiment_id, &o.participant_id});
      any = true;
    }
    if (any) experiment_ids.push_back(rep.experiment_id());
  }
  n_participants = pidx.size();
  return rows;
}

void add_column(LmmDesign& d, std::string name, const VectorXd& base, bool interacts) {
  const auto n = d.y.size();
  d.x.conservativeResize(n, d.x.cols() + 1);
  d.x.col(d.x.cols() - 1) = interacts ? VectorXd(base.cwiseProduct(d.treatment)) : base;
  d.names.push_back(std::move(name));
  d.interacts.push_back(interacts);
  d.base_mean.push_back(base.mean());
}

LmmDesign base_design(const std::vector<Row>& rows, std::vector<std::string> experiment_ids,
                      std::size_t n_participants, bool experiment_factor) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  LmmDesign d;
  d.y.resize(n);
  d.treatment.resize(n);
  d.x.resize(n, 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    d.y(i) = r.y;
    d.treatment(i) = r.t;
    d.experiment.push_back(r.experiment);
    d.participant.push_back(r.participant);
  }
  d.experiment_ids = std::move(experiment_ids);
  d.n_participants = n_participants;
  const VectorXd ones = VectorXd::Ones(n);
  add_column(d, "(intercept)", ones, false);
  add_column(d, "treatment", ones, true);
  if (experiment_factor) {
    for (std::size_t j = 1; j < d.experiment_ids.size(); ++j) {
      VectorXd ind(n);
      for (Eigen::Index i = 0; i < n; ++i) ind(i) = d.experiment[i] == j ? 1.0 : 0.0;
      add_column(d, fmt::format("experiment[{}]", d.experiment_ids[j]), ind, false);
    }
  }
  return d;
}

// -- REML criterion ----------------------------------------------------------

struct Layout {
  bool experiment = false;
  bool participant = false;
  std::size_t size() const { return (experiment ? 3 : 0) + (participant ? 1 : 0); }
};

struct Relative {
  // Psi / s^2 and s_p^2 / s^2.
  double psi11 = 0.0, psi12 = 0.0, psi22 = 0.0, gamma = 0.0;
};

Relative unpack(const Layout& layout, const std::vector<double>& theta) {
  Relative r;
  std::size_t k = 0;
  if (layout.experiment) {
    const double l11 = std::exp(theta[0]);
    const double l21 = theta[1];
    const double l22 = std::exp(theta[2]);
    r.psi11 = l11 * l11;
    r.psi12 = l11 * l21;
    r.psi22 = l21 * l21 + l22 * l22;
    k = 3;
  }
  if (layout.participant) r.gamma = std::exp(theta[k]);
  return r;
}

struct Evaluation {
  double criterion = kInf;
  VectorXd beta;
  MatrixXd xtvx_inv;  // (X' H^-1 X)^-1
  double sigma2 = 0.0;
};

class RemlProblem {
 public:
  RemlProblem(const LmmDesign& d, Layout layout) : d_(d), layout_(layout) {
    blocks_.resize(d.experiment_ids.size());
    for (std::size_t i = 0; i < d.experiment.size(); ++i) {
      blocks_[d.experiment[i]].push_back(static_cast<Eigen::Index>(i));
    }
  }

  Evaluation evaluate(const Relative& rel) const {
    const auto p = d_.x.cols();
    const auto n = d_.y.size();
    MatrixXd xtx = MatrixXd::Zero(p, p);
    VectorXd xty = VectorXd::Zero(p);
    double yty = 0.0;
    double logdet = 0.0;
    for (const auto& rows : blocks_) {
      const auto m = static_cast<Eigen::Index>(rows.size());
      MatrixXd h(m, m);
      for (Eigen::Index a = 0; a < m; ++a) {
        const auto ia = static_cast<std::size_t>(rows[a]);
        const double ta = d_.treatment(rows[a]);
        for (Eigen::Index b = 0; b <= a; ++b) {
          const auto ib = static_cast<std::size_t>(rows[b]);
          const double tb = d_.treatment(rows[b]);
          double v = rel.psi11 + rel.psi12 * (ta + tb) + rel.psi22 * ta * tb;
          if (d_.participant[ia] == d_.participant[ib]) v += rel.gamma;
          if (a == b) v += 1.0;
          h(a, b) = v;
          h(b, a) = v;
        }
      }
      Eigen::LLT<MatrixXd> llt(h);
      if (llt.info() != Eigen::Success) return {};
      const MatrixXd& l = llt.matrixL();
      logdet += 2.0 * l.diagonal().array().log().sum();
      MatrixXd xb(m, p);
      VectorXd yb(m);
      for (Eigen::Index a = 0; a < m; ++a) {
        xb.row(a) = d_.x.row(rows[a]);
        yb(a) = d_.y(rows[a]);
      }
      const MatrixXd wx = llt.matrixL().solve(xb);
      const VectorXd wy = llt.matrixL().solve(yb);
      xtx.noalias() += wx.transpose() * wx;
      xty.noalias() += wx.transpose() * wy;
      yty += wy.squaredNorm();
    }
    Eigen::LLT<MatrixXd> xl(xtx);
    if (xl.info() != Eigen::Success) return {};
    Evaluation e;
    e.beta = xl.solve(xty);
    const double rss = yty - e.beta.dot(xty);
    const double dof = static_cast<double>(n - p);
    if (!(rss > 0.0) || dof <= 0.0) return {};
    e.sigma2 = rss / dof;
    const MatrixXd& xll = xl.matrixL();
    const double logdet_x = 2.0 * xll.diagonal().array().log().sum();
    e.criterion = logdet + logdet_x + dof * (1.0 + std::log(2.0 * std::numbers::pi * e.sigma2));
    e.xtvx_inv = xl.solve(MatrixXd::Identity(p, p));
    return e;
  }

  double operator()(const std::vector<double>& theta) const {
    return evaluate(unpack(layout_, theta)).criterion;
  }

 private:
  const LmmDesign& d_;
  Layout layout_;
  std::vector<std::vector<Eigen::Index>> blocks_;
};

std::vector<double> starting_values(const LmmDesign& d, const Layout& layout) {
  std::vector<double> theta;
  if (layout.experiment) {
    // Method of moments on per-experiment arm means.
    const std::size_t j_count = d.experiment_ids.size();
    std::vector<double> sum_c(j_count), sum_t(j_count), n_c(j_count), n_t(j_count);
    for (Eigen::Index i = 0; i < d.y.size(); ++i) {
      const auto j = d.experiment[static_cast<std::size_t>(i)];
      if (d.treatment(i) > 0.5) {
        sum_t[j] += d.y(i);
        n_t[j] += 1;
      } else {
        sum_c[j] += d.y(i);
        n_c[j] += 1;
      }
    }
    std::vector<double> base, diff;
    double within = 0.0;
    double within_n = 0.0;
    for (std::size_t j = 0; j < j_count; ++j) {
      if (n_c[j] < 1 || n_t[j] < 1) continue;
      base.push_back(sum_c[j] / n_c[j]);
      diff.push_back(sum_t[j] / n_t[j] - sum_c[j] / n_c[j]);
    }
    for (Eigen::Index i = 0; i < d.y.size(); ++i) {
      const auto j = d.experiment[static_cast<std::size_t>(i)];
      const double m = d.treatment(i) > 0.5 ? sum_t[j] / n_t[j] : sum_c[j] / n_c[j];
      within += (d.y(i) - m) * (d.y(i) - m);
      within_n += 1.0;
    }
    const double s2 = std::max(within / std::max(1.0, within_n - 2.0 * j_count), 1e-8);
    auto var = [](const std::vector<double>& v) {
      if (v.size() < 2) return 0.0;
      double m = 0.0;
      for (const double x : v) m += x;
      m /= static_cast<double>(v.size());
      double ss = 0.0;
      for (const double x : v) ss += (x - m) * (x - m);
      return ss / static_cast<double>(v.size() - 1);
    };
    const double psi11 = std::max(var(base) / s2, 0.05);
    const double psi22 = std::max(var(diff) / s2, 0.05);
    theta.push_back(0.5 * std::log(psi11));
    theta.push_back(0.0);
    theta.push_back(0.5 * std::log(psi22));
  }
  if (layout.participant) theta.push_back(0.0);
  return theta;
}

struct Optimum {
  std::vector<double> theta;
  double value = kInf;
  bool converged = false;
  std::size_t iterations = 0;
  std::vector<double> trace;
};

void append_trace(std::vector<double>& trace, const std::vector<double>& more) {
  for (const double v : more) {
    trace.push_back(trace.empty() ? v : std::min(trace.back(), v));
  }
}

Optimum minimize(const RemlProblem& problem, std::vector<double> x0, const FitOptions& options) {
  numerics::NelderMeadOptions nm;
  nm.tolerance = options.tolerance;
  nm.max_iter = options.max_iter;
  Optimum best;
  auto run_from = [&](std::vector<double> start) {
    Optimum o;
    o.theta = std::move(start);
    if (!std::isfinite(problem(o.theta))) return o;
    // Restart from the optimum until the criterion stops moving: a simplex
    // can collapse early in a flat direction.
    for (int restart = 0; restart < 6; ++restart) {
      const auto r = numerics::nelder_mead(std::cref(problem), o.theta, nm);
      append_trace(o.trace, r.trace);
      o.iterations += r.iterations;
      const double gain = o.value - r.value;
      o.theta = r.argmin;
      o.value = r.value;
      o.converged = r.converged;
      if (!r.converged || (std::isfinite(gain) && gain < options.tolerance)) break;
    }
    return o;
  };
  best = run_from(x0);
  if (!best.converged) {
    static constexpr double kJitter[3] = {0.7, -0.7, 1.3};
    for (const double j : kJitter) {
      std::vector<double> start = x0;
      for (std::size_t k = 0; k < start.size(); ++k) start[k] += (k % 2 == 0 ? j : -j);
      auto o = run_from(start);
      const std::size_t iters = best.iterations + o.iterations;
      auto trace = best.trace;
      append_trace(trace, o.trace);
      if (o.value < best.value) best = std::move(o);
      best.iterations = iters;
      best.trace = std::move(trace);
      if (best.converged) break;
    }
  }
  return best;
}

double reference_df(DfRule rule, const LmmFit& fit) {
  switch (rule) {
    case DfRule::z: return kInf;
    case DfRule::experiments_minus_one:
      return fit.n_experiments > 1 ? static_cast<double>(fit.n_experiments - 1) : kInf;
    case DfRule::residual:
      return static_cast<double>(fit.n_observations) - static_cast<double>(fit.beta.size());
  }
  return kInf;
}

FixedEffect infer(std::string name, double estimate, double variance, double df, double alpha) {
  FixedEffect f;
  f.name = std::move(name);
  f.estimate = estimate;
  f.se = std::sqrt(std::max(0.0, variance));
  f.df = df;
  f.statistic = f.se > 0.0 ? estimate / f.se : 0.0;
  const double crit = std::isinf(df) ? numerics::normal_quantile(1.0 - alpha / 2.0)
                                     : numerics::t_quantile(1.0 - alpha / 2.0, df);
  f.ci_low = estimate - crit * f.se;
  f.ci_high = estimate + crit * f.se;
  f.p_value = f.se > 0.0 ? numerics::two_sided_p(f.statistic, df) : 1.0;
  return f;
}

void apply_inference(LmmFit& fit, DfRule rule, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("alpha must lie in (0, 1)");
  fit.df_rule = rule;
  fit.alpha = alpha;
  const double df = reference_df(rule, fit);
  fit.fixed.clear();
  for (Eigen::Index k = 0; k < fit.beta.size(); ++k) {
    fit.fixed.push_back(infer(fit.names[static_cast<std::size_t>(k)], fit.beta(k),
                              fit.beta_covariance(k, k), df, alpha));
  }
  auto cell = [&](const char* name, const VectorXd& c) {
    return infer(name, c.dot(fit.beta), c.dot(fit.beta_covariance * c), df, alpha);
  };
  fit.control_mean = cell("control", fit.control_contrast);
  fit.treatment_mean = cell("treatment", fit.treatment_contrast);
  fit.ratio = fit.control_mean.estimate != 0.0
                  ? fit.treatment_mean.estimate / fit.control_mean.estimate
                  : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

std::string_view to_string(DfRule rule) {
  switch (rule) {
    case DfRule::z: return "z";
    case DfRule::experiments_minus_one: return "experiments-minus-1";
    case DfRule::residual: return "residual";
  }
  return "";
}

DfRule parse_df_rule(std::string_view text) {
  if (text == "z") return DfRule::z;
  if (text == "experiments-minus-1" || text == "experiments_minus_one") {
    return DfRule::experiments_minus_one;
  }
  if (text == "residual") return DfRule::residual;
  throw std::invalid_argument(
      fmt::format("unknown df rule '{}' (experiments-minus-1 or z)", text));
}

std::string_view to_string(Separation s) {
  return s == Separation::naive ? "naive" : "within_between";
}

Separation parse_separation(std::string_view text) {
  if (text == "naive") return Separation::naive;
  if (text == "within_between" || text == "within-between") return Separation::within_between;
  throw std::invalid_argument(fmt::format("unknown separation '{}'", text));
}

double VarianceComponents::sd_diff() const { return std::sqrt(std::max(0.0, experiment_slope)); }

LmmDesign build_design(const ReplicationSet& data, bool experiment_factor, MissingPolicy missing) {
  std::vector<std::string> ids;
  std::size_t np = 0;
  const auto rows = collect_rows(data, missing, {}, ids, np);
  return base_design(rows, std::move(ids), np, experiment_factor);
}

MatrixXd marginal_covariance_block(std::span<const double> treatment,
                                   std::span<const std::size_t> participant,
                                   const VarianceComponents& vc) {
  if (treatment.size() != participant.size()) {
    throw std::invalid_argument("marginal covariance: treatment and participant differ in length");
  }
  const auto m = static_cast<Eigen::Index>(treatment.size());
  MatrixXd v(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) {
      const double ta = treatment[static_cast<std::size_t>(a)];
      const double tb = treatment[static_cast<std::size_t>(b)];
      double x = vc.experiment_intercept + vc.experiment_covariance * (ta + tb) +
                 vc.experiment_slope * ta * tb;
      if (participant[static_cast<std::size_t>(a)] == participant[static_cast<std::size_t>(b)]) {
        x += vc.participant;
      }
      if (a == b) x += vc.residual;
      v(a, b) = x;
    }
  }
  return v;
}

const FixedEffect& LmmFit::effect(std::string_view name) const {
  for (const auto& f : fixed) {
    if (f.name == name) return f;
  }
  throw std::out_of_range(fmt::format("no fixed effect named '{}'", name));
}

LmmFit LmmFit::with_inference(DfRule rule, double a) const {
  LmmFit out = *this;
  apply_inference(out, rule, a);
  return out;
}

LmmFit fit_design(const LmmDesign& design, const ModelSpec& spec, const FitOptions& options) {
  const bool random_exp = spec.random == RandomStructure::experiment_intercept_slope;
  if (random_exp && spec.experiment_factor) {
    throw std::invalid_argument(
        "an experiment fixed factor and random experiment effects are mutually exclusive");
  }
  if (random_exp && design.experiment_ids.size() < 2) {
    throw std::invalid_argument("random experiment effects need at least 2 experiments");
  }
  const auto n = design.y.size();
  const auto p = design.x.cols();
  if (n <= p) throw std::invalid_argument("fewer observations than fixed effects");
  {
    // Rank check on the fixed design.
    const VectorXd w = VectorXd::Ones(n);
    (void)numerics::wls_solve(design.x, design.y, w);
  }

  const Layout layout{random_exp, spec.participant_intercept};
  const RemlProblem problem(design, layout);

  LmmFit fit;
  fit.spec = spec;
  fit.names = design.names;
  fit.n_observations = static_cast<std::size_t>(n);
  fit.n_experiments = design.experiment_ids.size();
  fit.n_participants = design.n_participants;

  Relative rel;
  if (layout.size() == 0) {
    fit.converged = true;
  } else {
    auto opt = minimize(problem, starting_values(design, layout), options);
    if (!std::isfinite(opt.value)) {
      throw std::runtime_error("marginal covariance is singular at every trial point");
    }
    rel = unpack(layout, opt.theta);
    fit.converged = opt.converged;
    fit.iterations = opt.iterations;
    fit.trace = std::move(opt.trace);
    if (!fit.converged) {
      fit.warnings.push_back(fmt::format(
          "REML optimizer did not converge after {} iterations (last criterion {:.6f})",
          fit.iterations, opt.value));
    }
  }
  const auto e = problem.evaluate(rel);
  if (!std::isfinite(e.criterion)) throw std::runtime_error("singular marginal covariance");
  fit.reml_criterion = e.criterion;
  fit.beta = e.beta;
  fit.beta_covariance = e.sigma2 * e.xtvx_inv;
  fit.variance.residual = e.sigma2;
  fit.variance.experiment_intercept = rel.psi11 * e.sigma2;
  fit.variance.experiment_covariance = rel.psi12 * e.sigma2;
  fit.variance.experiment_slope = rel.psi22 * e.sigma2;
  fit.variance.participant = rel.gamma * e.sigma2;

  fit.control_contrast.resize(p);
  fit.treatment_contrast.resize(p);
  for (Eigen::Index k = 0; k < p; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    fit.control_contrast(k) = design.interacts[kk] ? 0.0 : design.base_mean[kk];
    fit.treatment_contrast(k) = design.base_mean[kk];
  }
  apply_inference(fit, options.df_rule, options.alpha);
  return fit;
}

LmmFit fit_ols(const ReplicationSet& data, bool include_experiment_factor, MissingPolicy missing,
               double alpha) {
  const auto design = build_design(data, include_experiment_factor, missing);
  ModelSpec spec;
  spec.experiment_factor = include_experiment_factor;
  spec.random = RandomStructure::none;
  spec.participant_intercept = false;
  FitOptions options;
  options.df_rule = DfRule::residual;
  options.alpha = alpha;
  auto fit = fit_design(design, spec, options);
  if (!include_experiment_factor) fit.warnings.emplace_back(kGuideline2Warning);
  return fit;
}

TestResult pooled_paired_t(const ReplicationSet& data, const TTestOptions& options) {
  PairedSample all;
  all.experiment_id = "pooled";
  for (const auto& rep : data.replications()) {
    if (rep.design() != Design::within_subjects) continue;
    const auto pairs = complete_pairs(rep);
    all.differences.insert(all.differences.end(), pairs.differences.begin(),
                           pairs.differences.end());
    all.control.insert(all.control.end(), pairs.control.begin(), pairs.control.end());
    all.treatment.insert(all.treatment.end(), pairs.treatment.begin(), pairs.treatment.end());
  }
  all.n_pairs = all.differences.size();
  if (all.n_pairs < 2) throw std::domain_error("pooled paired t-test needs at least 2 pairs");
  return paired_t_test(all, options);
}

LmmFit fit_lmm_reml(const ReplicationSet& data, const ModelSpec& spec, const FitOptions& options) {
  if (spec.moderator) {
    throw std::invalid_argument(
        "fit_lmm_reml fits the main model; use the moderator functions for interactions");
  }
  return fit_design(build_design(data, spec.experiment_factor), spec, options);
}

LmmFit moderator_experiment_level(const ReplicationSet& data,
                                  const std::map<std::string, std::string>& labels,
                                  const FitOptions& options) {
  auto design = build_design(data, false);
  std::set<std::string> levels;
  for (const auto& id : design.experiment_ids) {
    const auto it = labels.find(id);
    if (it == labels.end()) throw std::invalid_argument(fmt::format("no label for '{}'", id));
    levels.insert(it->second);
  }
  if (levels.size() < 2) {
    throw std::invalid_argument("experiment-level moderator is constant across experiments");
  }
  const auto n = design.y.size();
  std::string first_name;
  for (auto level = std::next(levels.begin()); level != levels.end(); ++level) {
    VectorXd ind(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      ind(i) = labels.at(design.experiment_ids[design.experiment[static_cast<std::size_t>(i)]]) ==
                       *level
                   ? 1.0
                   : 0.0;
    }
    const auto name = fmt::format("label[{}]", *level);
    if (first_name.empty()) first_name = name;
    add_column(design, name, ind, false);
    add_column(design, "treatment:" + name, ind, true);
  }
  ModelSpec spec;
  spec.moderator = ModeratorSpec{first_name, ModeratorLevel::experiment, Separation::naive};
  return fit_design(design, spec, options);
}

LmmFit moderator_participant_level(const ReplicationSet& data, const CovariateTable& covariates,
                                   Covariate covariate, Separation separation,
                                   const FitOptions& options) {
  std::vector<std::string> ids;
  std::size_t np = 0;
  std::set<std::pair<std::string, std::string>> dropped;
  const Keep keep = [&](const std::string& e, const std::string& p) {
    if (covariates.find(e, p) != nullptr) return true;
    dropped.insert({e, p});
    return false;
  };
  const auto rows = collect_rows(data, MissingPolicy::all_observations, keep, ids, np);
  auto design = base_design(rows, ids, np, false);
  const auto n = design.y.size();

  VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    x(i) = covariates.find(*r.experiment_id, *r.participant_id)->value(covariate);
  }
  if (x.maxCoeff() - x.minCoeff() <= 0.0) {
    throw std::invalid_argument(
        fmt::format("covariate '{}' is constant in the analyzed data", to_string(covariate)));
  }
  const std::string name(to_string(covariate));
  if (separation == Separation::naive) {
    add_column(design, name, x, false);
    add_column(design, "treatment:" + name, x, true);
  } else {
    // Experiment means over participants, not rows.
    std::vector<double> sum(design.experiment_ids.size(), 0.0);
    std::vector<double> cnt(design.experiment_ids.size(), 0.0);
    std::set<std::size_t> seen;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& r = rows[static_cast<std::size_t>(i)];
      if (!seen.insert(r.participant).second) continue;
      sum[r.experiment] += x(i);
      cnt[r.experiment] += 1.0;
    }
    VectorXd xb(n), xw(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto j = rows[static_cast<std::size_t>(i)].experiment;
      xb(i) = sum[j] / cnt[j];
      xw(i) = x(i) - xb(i);
    }
    if (xw.cwiseAbs().maxCoeff() <= 0.0) {
      throw std::invalid_argument(
          fmt::format("covariate '{}' does not vary within any experiment", name));
    }
    add_column(design, name, xw, false);
    add_column(design, name + "_between", xb, false);
    add_column(design, "treatment:" + name, xw, true);
    add_column(design, "treatment:" + name + "_between", xb, true);
  }
  ModelSpec spec;
  spec.moderator = ModeratorSpec{name, ModeratorLevel::participant, separation};
  auto fit = fit_design(design, spec, options);
  fit.moderator_mean = x.mean();
  if (!dropped.empty()) {
    fit.warnings.push_back(fmt::format("{} participant(s) without covariate data left out",
                                       dropped.size()));
  }
  return fit;
}

std::string interaction_name(const LmmFit& fit) {
  if (!fit.spec.moderator) throw std::invalid_argument("fit has no moderator");
  return "treatment:" + fit.spec.moderator->name;
}

nlohmann::json to_json(const LmmFit& fit) {
  nlohmann::json fixed = nlohmann::json::array();
  auto fe = [](const FixedEffect& f) {
    return nlohmann::json{{"name", f.name},
                          {"estimate", f.estimate},
                          {"se", f.se},
                          {"statistic", f.statistic},
                          {"df", std::isinf(f.df) ? nlohmann::json("inf") : nlohmann::json(f.df)},
                          {"ci", {f.ci_low, f.ci_high}},
                          {"p_value", f.p_value}};
  };
  for (const auto& f : fit.fixed) fixed.push_back(fe(f));
  nlohmann::json j = {
      {"fixed", fixed},
      {"cell_means", {{"control", fe(fit.control_mean)}, {"treatment", fe(fit.treatment_mean)}}},
      {"ratio", fit.ratio},
      {"variance",
       {{"experiment_intercept", fit.variance.experiment_intercept},
        {"experiment_slope", fit.variance.experiment_slope},
        {"experiment_covariance", fit.variance.experiment_covariance},
        {"sd_diff", fit.variance.sd_diff()},
        {"participant", fit.variance.participant},
        {"residual", fit.variance.residual}}},
      {"df_rule", to_string(fit.df_rule)},
      {"alpha", fit.alpha},
      {"reml_criterion", fit.reml_criterion},
      {"converged", fit.converged},
      {"iterations", fit.iterations},
      {"n_observations", fit.n_observations},
      {"n_experiments", fit.n_experiments},
      {"n_participants", fit.n_participants},
      {"warnings", fit.warnings}};
  if (fit.spec.moderator) {
    j["moderator"] = {{"name", fit.spec.moderator->name},
                      {"level", fit.spec.moderator->level == ModeratorLevel::experiment
                                    ? "experiment"
                                    : "participant"},
                      {"separation", to_string(fit.spec.moderator->separation)}};
  }
  return j;
}

}  // namespace replimeta
