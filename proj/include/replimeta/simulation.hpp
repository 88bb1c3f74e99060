#pragma once

// Seeded Monte-Carlo scenarios for between-subjects groups of replications.
//
// Random numbers come from PCG32 (XSH-RR output, 64-bit LCG state). Each
// (seed, iteration, experiment, arm) tuple owns a substream whose state and
// increment are derived with SplitMix64, so any iteration can be regenerated
// on its own. Normal variates use the inverse CDF of a 53-bit uniform.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "replimeta/data.hpp"

namespace replimeta {

class Pcg32 {
 public:
  Pcg32(std::uint64_t state_seed, std::uint64_t stream);
  std::uint32_t next_u32();
  /// Uniform on the open interval (0, 1) with 53 random bits.
  double next_open01();
  double next_normal(double mean, double sd);

 private:
  std::uint64_t state_ = 0;
  std::uint64_t inc_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Generator for one (seed, iteration, experiment, arm) substream.
Pcg32 substream(std::uint64_t seed, std::uint64_t iteration, std::uint64_t experiment,
                std::uint64_t arm);

struct ArmSpec {
  double mean = 0.0;
  double sd = 1.0;
  std::size_t n = 2;
};

struct ExperimentSpec {
  std::string id;
  ArmSpec control;
  ArmSpec treatment;
};

struct ScenarioSpec {
  std::vector<ExperimentSpec> experiments;
  std::uint64_t seed = 20190101;
  std::size_t n_iterations = 1000;

  /// Throws std::invalid_argument unless sds > 0 and every n >= 2.
  void validate() const;
};

/// Two unbalanced between-subjects replications with a common effect of 10:
/// N(20,10^2) n=90 vs N(30,10^2) n=10, and N(60,10^2) n=10 vs N(70,10^2) n=90.
ScenarioSpec unbalanced_two_experiment_scenario();

ScenarioSpec scenario_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ScenarioSpec& spec);

/// Between-subjects data for one iteration; fully determined by (seed, iteration).
ReplicationSet simulate_scenario(const ScenarioSpec& spec, std::size_t iteration);

struct EstimatorSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  /// 0.5% and 99.5% empirical quantiles.
  double lower_99 = 0.0;
  double upper_99 = 0.0;
  double analytic = 0.0;
  std::vector<double> estimates;
};

struct BiasReport {
  EstimatorSummary ipd_mt;
  EstimatorSummary ipd_s;
  std::size_t n_iterations = 0;
  std::uint64_t seed = 0;
};

/// Expected IPD-MT estimate: pooled treatment mean minus pooled control mean,
/// each weighted by arm sizes.
double analytic_ipd_mt(const ScenarioSpec& spec);
/// Expected IPD-S (treatment + experiment ANOVA) estimate: within-experiment
/// differences weighted by n_c n_t / (n_c + n_t).
double analytic_ipd_s(const ScenarioSpec& spec);

/// Fits treatment-only and treatment + experiment least squares per iteration.
BiasReport compare_mt_vs_s(const ScenarioSpec& spec);

}  // namespace replimeta
