#include "replimeta/config.hpp"

#include <fstream>

#include <fmt/format.h>

namespace replimeta {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, std::initializer_list<std::string_view> known,
                    std::string_view where) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const auto k : known) ok = ok || key == k;
    if (!ok) throw ConfigError(fmt::format("unknown key '{}' in {}", key, where));
  }
}

template <class T>
T get(const json& j, std::string_view key, T fallback) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(fmt::format("config key '{}' has the wrong type", key));
  }
}

const json& section(const json& j, std::string_view key) {
  static const json empty = json::object();
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return empty;
  if (!it->is_object()) throw ConfigError(fmt::format("config key '{}' must be an object", key));
  return *it;
}

template <class F>
auto parse_enum(const json& j, std::string_view key, F parse, decltype(parse("")) fallback) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  if (!it->is_string()) throw ConfigError(fmt::format("config key '{}' must be a string", key));
  try {
    return parse(it->get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("config key '{}': {}", key, e.what()));
  }
}

MissingPolicy parse_missing(std::string_view text) {
  if (text == "all_observations") return MissingPolicy::all_observations;
  if (text == "complete_pairs") return MissingPolicy::complete_pairs;
  throw std::invalid_argument(fmt::format("unknown missing-data policy '{}'", text));
}

std::string_view to_string(MissingPolicy m) {
  return m == MissingPolicy::complete_pairs ? "complete_pairs" : "all_observations";
}

}  // namespace

std::vector<std::string> AnalysisConfig::validate() const {
  auto in_unit = [](double a) { return a > 0.0 && a < 1.0; };
  if (!in_unit(alpha_main)) throw ConfigError(fmt::format("alpha must be in (0, 1), got {}", alpha_main));
  if (!in_unit(alpha_moderator)) {
    throw ConfigError(fmt::format("alpha_moderator must be in (0, 1), got {}", alpha_moderator));
  }
  if (levels.control.empty() || levels.treatment.empty() || levels.control == levels.treatment) {
    throw ConfigError("treatment levels must be two distinct non-empty labels");
  }
  try {
    scenario.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("simulation: {}", e.what()));
  }
  std::vector<std::string> notes;
  if (alpha_moderator > alpha_main) {
    notes.push_back(fmt::format(
        "Exploratory analyses use alpha = {} (raised from {}) to flag candidate moderators; "
        "flagged effects are hypotheses, not findings.",
        alpha_moderator, alpha_main));
  } else if (alpha_moderator < alpha_main) {
    notes.push_back(fmt::format(
        "alpha_moderator ({}) is below alpha ({}); moderator screening will be conservative.",
        alpha_moderator, alpha_main));
  }
  return notes;
}

ParseOptions AnalysisConfig::parse_options() const {
  ParseOptions o;
  o.levels = levels;
  o.designs = designs;
  o.default_design = default_design;
  o.excluded = excluded;
  o.outcome_name = outcome_name;
  o.outcome_unit = outcome_unit;
  return o;
}

AnalysisConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j,
                 {"inputs", "outcome", "treatment_levels", "designs", "exclude",
                  "experiment_labels", "alpha", "alpha_moderator", "effect_size", "meta",
                  "individual", "pooling", "lmm", "anova", "report", "simulation", "out_dir"},
                 "config");
  AnalysisConfig c;

  const auto& inputs = section(j, "inputs");
  reject_unknown(inputs, {"raw", "summary", "covariates"}, "inputs");
  auto path = [&](std::string_view key) -> std::optional<std::filesystem::path> {
    const auto s = get<std::string>(inputs, key, "");
    if (s.empty()) return std::nullopt;
    std::filesystem::path p(s);
    return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
  };
  c.raw = path("raw");
  c.summary = path("summary");
  c.covariates = path("covariates");

  const auto& outcome = section(j, "outcome");
  reject_unknown(outcome, {"name", "unit"}, "outcome");
  c.outcome_name = get<std::string>(outcome, "name", c.outcome_name);
  c.outcome_unit = get<std::string>(outcome, "unit", c.outcome_unit);

  const auto& levels = section(j, "treatment_levels");
  reject_unknown(levels, {"control", "treatment"}, "treatment_levels");
  c.levels.control = get<std::string>(levels, "control", c.levels.control);
  c.levels.treatment = get<std::string>(levels, "treatment", c.levels.treatment);

  const auto& designs = section(j, "designs");
  for (const auto& [key, value] : designs.items()) {
    if (!value.is_string()) throw ConfigError("designs values must be strings");
    Design d;
    try {
      d = parse_design(value.get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(fmt::format("designs.{}: {}", key, e.what()));
    }
    if (key == "default") c.default_design = d;
    else c.designs[key] = d;
  }

  if (const auto it = j.find("exclude"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw ConfigError("exclude must be a list of [experiment, participant]");
    for (const auto& e : *it) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_string()) {
        throw ConfigError("exclude entries must be [experiment_id, participant_id]");
      }
      c.excluded.insert({e[0].get<std::string>(), e[1].get<std::string>()});
    }
  }

  for (const auto& [key, value] : section(j, "experiment_labels").items()) {
    if (!value.is_string()) throw ConfigError("experiment_labels values must be strings");
    c.experiment_labels[key] = value.get<std::string>();
  }

  c.alpha_main = get<double>(j, "alpha", c.alpha_main);
  c.alpha_moderator = get<double>(j, "alpha_moderator", c.alpha_moderator);

  const auto& es = section(j, "effect_size");
  reject_unknown(es, {"hedges"}, "effect_size");
  c.hedges = get<bool>(es, "hedges", c.hedges);

  const auto& meta = section(j, "meta");
  reject_unknown(meta, {"tau2", "subgroup_tau2"}, "meta");
  c.tau2 = parse_enum(meta, "tau2", parse_tau2_estimator, c.tau2);
  c.subgroup_tau2 = parse_enum(meta, "subgroup_tau2", parse_tau2_estimator, c.subgroup_tau2);

  const auto& individual = section(j, "individual");
  reject_unknown(individual, {"paired_df"}, "individual");
  c.paired_df = parse_enum(individual, "paired_df", parse_paired_df_rule, c.paired_df);

  const auto& pooling = section(j, "pooling");
  reject_unknown(pooling, {"sidedness"}, "pooling");
  c.pooling_sidedness = parse_enum(pooling, "sidedness", parse_sidedness, c.pooling_sidedness);

  const auto& lmm = section(j, "lmm");
  reject_unknown(lmm, {"df_rule", "separation"}, "lmm");
  c.df_rule = parse_enum(lmm, "df_rule", parse_df_rule, c.df_rule);
  c.separation = parse_enum(lmm, "separation", parse_separation, c.separation);

  const auto& anova = section(j, "anova");
  reject_unknown(anova, {"missing"}, "anova");
  c.anova_missing = parse_enum(anova, "missing", parse_missing, c.anova_missing);

  const auto& report = section(j, "report");
  reject_unknown(report, {"ipd_mt", "p_pooling"}, "report");
  c.ipd_mt = get<bool>(report, "ipd_mt", c.ipd_mt);
  c.p_pooling = get<bool>(report, "p_pooling", c.p_pooling);

  if (const auto it = j.find("simulation"); it != j.end() && !it->is_null()) {
    try {
      c.scenario = scenario_from_json(*it);
    } catch (const json::exception& e) {
      throw ConfigError(fmt::format("simulation: {}", e.what()));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(fmt::format("simulation: {}", e.what()));
    }
  }

  c.out_dir = get<std::string>(j, "out_dir", c.out_dir.string());
  return c;
}

AnalysisConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path.string()));
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("config '{}': {}", path.string(), e.what()));
  }
  return config_from_json(j, path.parent_path());
}

json to_json(const AnalysisConfig& c) {
  auto opt = [](const std::optional<std::filesystem::path>& p) {
    return p ? json(p->generic_string()) : json(nullptr);
  };
  json designs = {{"default", to_string(c.default_design)}};
  for (const auto& [k, v] : c.designs) designs[k] = to_string(v);
  json excluded = json::array();
  for (const auto& [e, p] : c.excluded) excluded.push_back({e, p});
  return {
      {"inputs", {{"raw", opt(c.raw)}, {"summary", opt(c.summary)}, {"covariates", opt(c.covariates)}}},
      {"outcome", {{"name", c.outcome_name}, {"unit", c.outcome_unit}}},
      {"treatment_levels", {{"control", c.levels.control}, {"treatment", c.levels.treatment}}},
      {"designs", designs},
      {"exclude", excluded},
      {"experiment_labels", c.experiment_labels},
      {"alpha", c.alpha_main},
      {"alpha_moderator", c.alpha_moderator},
      {"effect_size", {{"hedges", c.hedges}}},
      {"meta", {{"tau2", to_string(c.tau2)}, {"subgroup_tau2", to_string(c.subgroup_tau2)}}},
      {"individual", {{"paired_df", to_string(c.paired_df)}}},
      {"pooling", {{"sidedness", to_string(c.pooling_sidedness)}}},
      {"lmm", {{"df_rule", to_string(c.df_rule)}, {"separation", to_string(c.separation)}}},
      {"anova", {{"missing", to_string(c.anova_missing)}}},
      {"report", {{"ipd_mt", c.ipd_mt}, {"p_pooling", c.p_pooling}}},
      {"simulation", to_json(c.scenario)},
      {"out_dir", c.out_dir.generic_string()},
  };
}

}  // namespace replimeta
