#pragma once

// Shared fixtures: paths to the committed data, a quadrature oracle, and
// small builders for in-memory datasets.

#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "replimeta/config.hpp"
#include "replimeta/data.hpp"
#include "replimeta/simulation.hpp"

namespace testing {

inline std::filesystem::path data_dir() { return REPLIMETA_DATA_DIR; }
inline std::filesystem::path illustrative_config_path() {
  return data_dir() / "illustrative" / "config.json";
}
inline replimeta::AnalysisConfig illustrative_config() {
  return replimeta::load_config(illustrative_config_path());
}
inline replimeta::ReplicationSet illustrative_raw() {
  const auto c = illustrative_config();
  return replimeta::load_raw_dataset(*c.raw, c.parse_options());
}

namespace detail {
inline double simpson_step(const std::function<double(double)>& f, double a, double b, double fa,
                           double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

/// Adaptive Simpson quadrature, the independent oracle for the closed-form
/// distribution functions.
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-13) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson_step(f, a, b, fa, fm, fb, whole, tol, 50);
}

/// One within-subjects experiment from complete pairs, ids P01, P02, ...
inline replimeta::Replication paired_replication(const std::string& id,
                                                 const std::vector<double>& control,
                                                 const std::vector<double>& treatment) {
  std::vector<replimeta::Observation> obs;
  for (std::size_t i = 0; i < control.size(); ++i) {
    const std::string pid = id + "-P" + std::to_string(i + 1);
    obs.push_back({id, pid, replimeta::Arm::control, control[i]});
    obs.push_back({id, pid, replimeta::Arm::treatment, treatment[i]});
  }
  return replimeta::Replication(id, replimeta::Design::within_subjects, std::move(obs));
}

/// Applies y -> a + b y to every observed outcome.
inline replimeta::ReplicationSet affine(const replimeta::ReplicationSet& data, double a,
                                        double b) {
  std::vector<replimeta::Replication> reps;
  for (const auto& rep : data.replications()) {
    auto obs = rep.observations();
    for (auto& o : obs) {
      if (o.outcome) o.outcome = a + b * *o.outcome;
    }
    reps.emplace_back(rep.experiment_id(), rep.design(), std::move(obs));
  }
  return replimeta::ReplicationSet(std::move(reps), data.outcome_name(), data.outcome_unit());
}

struct LmmTruth {
  double beta0 = 30.0;
  double beta1 = 20.0;
  double sd_exp_intercept = 8.0;
  double sd_exp_slope = 6.0;
  double sd_participant = 10.0;
  double sd_residual = 12.0;
};

/// Within-subjects data from the IPD-S generating model, reproducible from
/// `seed` through the toolkit's PCG32 substreams.
inline replimeta::ReplicationSet simulate_lmm(const LmmTruth& t, std::size_t experiments,
                                              std::size_t participants, std::uint64_t seed) {
  std::vector<replimeta::Replication> reps;
  for (std::size_t j = 0; j < experiments; ++j) {
    auto g = replimeta::substream(seed, 0, j, 7);
    const std::string id = "E" + std::to_string(j + 1);
    const double u0 = g.next_normal(0.0, t.sd_exp_intercept);
    const double u1 = g.next_normal(0.0, t.sd_exp_slope);
    std::vector<replimeta::Observation> obs;
    for (std::size_t i = 0; i < participants; ++i) {
      const std::string pid = id + "-P" + std::to_string(i + 1);
      const double a = g.next_normal(0.0, t.sd_participant);
      obs.push_back({id, pid, replimeta::Arm::control,
                     t.beta0 + u0 + a + g.next_normal(0.0, t.sd_residual)});
      obs.push_back({id, pid, replimeta::Arm::treatment,
                     t.beta0 + t.beta1 + u0 + u1 + a + g.next_normal(0.0, t.sd_residual)});
    }
    reps.emplace_back(id, replimeta::Design::within_subjects, std::move(obs));
  }
  return replimeta::ReplicationSet(std::move(reps));
}

}  // namespace testing
