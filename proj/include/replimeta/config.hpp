#pragma once

// Analysis configuration: one JSON file per run. Relative input paths are
// resolved against the directory of the config file; the output directory is
// taken as given. Every field has a default, so `{}` is a valid config for
// the commands that need no input files (simulate).

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "replimeta/data.hpp"
#include "replimeta/lmm.hpp"
#include "replimeta/meta.hpp"
#include "replimeta/simulation.hpp"
#include "replimeta/ttest.hpp"

namespace replimeta {

/// Invalid or inconsistent configuration (a user error).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AnalysisConfig {
  std::optional<std::filesystem::path> raw;
  std::optional<std::filesystem::path> summary;
  std::optional<std::filesystem::path> covariates;

  std::string outcome_name = "outcome";
  std::string outcome_unit;
  TreatmentLevels levels;
  Design default_design = Design::within_subjects;
  std::map<std::string, Design> designs;
  std::set<std::pair<std::string, std::string>> excluded;
  /// Experiment-level moderator (e.g. subject type). Falls back to the
  /// covariate table's subject_type when empty.
  std::map<std::string, std::string> experiment_labels;

  double alpha_main = 0.05;
  double alpha_moderator = 0.10;
  bool hedges = false;
  Tau2Estimator tau2 = Tau2Estimator::dersimonian_laird;
  Tau2Estimator subgroup_tau2 = Tau2Estimator::dersimonian_laird;
  PairedDfRule paired_df = PairedDfRule::pairs_minus_one;
  Sidedness pooling_sidedness = Sidedness::one_sided_greater;
  DfRule df_rule = DfRule::z;
  Separation separation = Separation::naive;
  MissingPolicy anova_missing = MissingPolicy::all_observations;
  bool ipd_mt = true;
  bool p_pooling = true;

  ScenarioSpec scenario = unbalanced_two_experiment_scenario();
  std::filesystem::path out_dir = "replimeta-out";

  /// Throws ConfigError; returns informational notes (e.g. the raised
  /// moderator alpha).
  std::vector<std::string> validate() const;
  ParseOptions parse_options() const;
};

AnalysisConfig config_from_json(const nlohmann::json& j,
                                const std::filesystem::path& base_dir = {});
AnalysisConfig load_config(const std::filesystem::path& path);
/// Echo of the effective settings (input paths as given, not hashed).
nlohmann::json to_json(const AnalysisConfig& config);

}  // namespace replimeta
