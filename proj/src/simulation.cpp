#include "replimeta/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "replimeta/descriptives.hpp"
#include "replimeta/distributions.hpp"
#include "replimeta/lmm.hpp"

namespace replimeta {

namespace {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      c_ += (sum_ - t) + x;
    } else {
      c_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + c_; }

 private:
  double sum_ = 0.0;
  double c_ = 0.0;
};

EstimatorSummary summarize(std::string name, std::vector<double> estimates, double analytic) {
  EstimatorSummary s;
  s.name = std::move(name);
  s.analytic = analytic;
  CompensatedSum sum;
  for (const double e : estimates) sum.add(e);
  s.mean = sum.value() / static_cast<double>(estimates.size());
  if (estimates.size() > 1) {
    CompensatedSum ss;
    for (const double e : estimates) ss.add((e - s.mean) * (e - s.mean));
    s.sd = std::sqrt(ss.value() / static_cast<double>(estimates.size() - 1));
  }
  s.lower_99 = quantile(estimates, 0.005);
  s.upper_99 = quantile(estimates, 0.995);
  s.estimates = std::move(estimates);
  return s;
}

}  // namespace

Pcg32::Pcg32(std::uint64_t state_seed, std::uint64_t stream) {
  inc_ = (stream << 1u) | 1u;
  next_u32();
  state_ += state_seed;
  next_u32();
}

std::uint32_t Pcg32::next_u32() {
  const std::uint64_t old = state_;
  state_ = old * 6364136223846793005ULL + inc_;
  const auto xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
  const auto rot = static_cast<std::uint32_t>(old >> 59u);
  return (xorshifted >> rot) | (xorshifted << ((-rot) & 31u));
}

double Pcg32::next_open01() {
  const std::uint64_t hi = next_u32();
  const std::uint64_t lo = next_u32();
  const std::uint64_t bits = ((hi << 32u) | lo) >> 11u;  // 53 bits
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double Pcg32::next_normal(double mean, double sd) {
  return mean + sd * numerics::normal_quantile(next_open01());
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30u)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27u)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31u);
}

Pcg32 substream(std::uint64_t seed, std::uint64_t iteration, std::uint64_t experiment,
                std::uint64_t arm) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ iteration);
  h = splitmix64(h ^ experiment);
  h = splitmix64(h ^ arm);
  return Pcg32(h, splitmix64(h ^ 0x5851F42D4C957F2DULL));
}

void ScenarioSpec::validate() const {
  if (experiments.empty()) throw std::invalid_argument("scenario has no experiments");
  for (const auto& e : experiments) {
    for (const ArmSpec* a : {&e.control, &e.treatment}) {
      if (!(a->sd > 0.0)) {
        throw std::invalid_argument(fmt::format("scenario '{}': sd must be positive", e.id));
      }
      if (a->n < 2) {
        throw std::invalid_argument(fmt::format("scenario '{}': arm size must be >= 2", e.id));
      }
      if (!std::isfinite(a->mean)) {
        throw std::invalid_argument(fmt::format("scenario '{}': mean must be finite", e.id));
      }
    }
  }
  if (n_iterations < 1) throw std::invalid_argument("scenario needs at least 1 iteration");
}

ScenarioSpec unbalanced_two_experiment_scenario() {
  ScenarioSpec s;
  s.experiments = {{"Exp. 1", {20.0, 10.0, 90}, {30.0, 10.0, 10}},
                   {"Exp. 2", {60.0, 10.0, 10}, {70.0, 10.0, 90}}};
  return s;
}

ScenarioSpec scenario_from_json(const nlohmann::json& j) {
  ScenarioSpec s;
  auto arm = [](const nlohmann::json& a) {
    return ArmSpec{a.at("mean").get<double>(), a.at("sd").get<double>(),
                   a.at("n").get<std::size_t>()};
  };
  for (const auto& e : j.at("experiments")) {
    s.experiments.push_back(
        {e.at("id").get<std::string>(), arm(e.at("control")), arm(e.at("treatment"))});
  }
  if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("iterations")) s.n_iterations = j.at("iterations").get<std::size_t>();
  s.validate();
  return s;
}

nlohmann::json to_json(const ScenarioSpec& spec) {
  nlohmann::json exps = nlohmann::json::array();
  auto arm = [](const ArmSpec& a) {
    return nlohmann::json{{"mean", a.mean}, {"sd", a.sd}, {"n", a.n}};
  };
  for (const auto& e : spec.experiments) {
    exps.push_back({{"id", e.id}, {"control", arm(e.control)}, {"treatment", arm(e.treatment)}});
  }
  return {{"experiments", exps}, {"seed", spec.seed}, {"iterations", spec.n_iterations}};
}

ReplicationSet simulate_scenario(const ScenarioSpec& spec, std::size_t iteration) {
  spec.validate();
  std::vector<Replication> reps;
  for (std::size_t j = 0; j < spec.experiments.size(); ++j) {
    const auto& e = spec.experiments[j];
    std::vector<Observation> obs;
    std::size_t pid = 0;
    for (const Arm arm : {Arm::control, Arm::treatment}) {
      const ArmSpec& a = arm == Arm::control ? e.control : e.treatment;
      auto rng = substream(spec.seed, iteration, j, arm == Arm::control ? 0 : 1);
      for (std::size_t i = 0; i < a.n; ++i) {
        obs.push_back({e.id, fmt::format("p{:04d}", ++pid), arm, rng.next_normal(a.mean, a.sd)});
      }
    }
    reps.emplace_back(e.id, Design::between_subjects, std::move(obs));
  }
  return ReplicationSet(std::move(reps), "outcome");
}

double analytic_ipd_mt(const ScenarioSpec& spec) {
  double nc = 0.0, nt = 0.0, sc = 0.0, st = 0.0;
  for (const auto& e : spec.experiments) {
    nc += static_cast<double>(e.control.n);
    nt += static_cast<double>(e.treatment.n);
    sc += static_cast<double>(e.control.n) * e.control.mean;
    st += static_cast<double>(e.treatment.n) * e.treatment.mean;
  }
  return st / nt - sc / nc;
}

double analytic_ipd_s(const ScenarioSpec& spec) {
  double num = 0.0, den = 0.0;
  for (const auto& e : spec.experiments) {
    const double nc = static_cast<double>(e.control.n);
    const double nt = static_cast<double>(e.treatment.n);
    const double h = nc * nt / (nc + nt);
    num += h * (e.treatment.mean - e.control.mean);
    den += h;
  }
  return num / den;
}

BiasReport compare_mt_vs_s(const ScenarioSpec& spec) {
  spec.validate();
  std::vector<double> mt(spec.n_iterations), s(spec.n_iterations);
  for (std::size_t it = 0; it < spec.n_iterations; ++it) {
    const auto data = simulate_scenario(spec, it);
    mt[it] = fit_ols(data, false).treatment_effect().estimate;
    s[it] = spec.experiments.size() > 1 ? fit_ols(data, true).treatment_effect().estimate : mt[it];
  }
  BiasReport r;
  r.n_iterations = spec.n_iterations;
  r.seed = spec.seed;
  r.ipd_mt = summarize("IPD-MT", std::move(mt), analytic_ipd_mt(spec));
  r.ipd_s = summarize("IPD-S", std::move(s), analytic_ipd_s(spec));
  return r;
}

}  // namespace replimeta
