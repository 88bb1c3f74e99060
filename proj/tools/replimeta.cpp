// replimeta: command-line front end for the four-step joint analysis of a
// group of replications.
//
//   replimeta report --config data/illustrative/config.json --out out/
//
// Exit status: 0 success, 1 user error (bad config, inputs or flags),
// 2 internal error.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "replimeta/config.hpp"
#include "replimeta/report.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::string> out;
  std::optional<double> alpha;
  std::optional<double> alpha_moderator;
  std::optional<bool> hedges;
  std::optional<std::string> df_rule;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> iterations;
};

/// Command line beats the environment, which beats the config file.
replimeta::AnalysisConfig effective_config(const Overrides& o) {
  auto c = o.config_path.empty() ? replimeta::config_from_json(nlohmann::json::object())
                                 : replimeta::load_config(o.config_path);
  if (const char* env = std::getenv("REPLIMETA_OUT_DIR"); env != nullptr && *env != '\0') {
    c.out_dir = env;
  }
  if (o.out) c.out_dir = *o.out;
  if (o.alpha) c.alpha_main = *o.alpha;
  if (o.alpha_moderator) c.alpha_moderator = *o.alpha_moderator;
  if (o.hedges) c.hedges = *o.hedges;
  if (o.df_rule) c.df_rule = replimeta::parse_df_rule(*o.df_rule);
  if (o.seed) c.scenario.seed = *o.seed;
  if (o.iterations) c.scenario.n_iterations = *o.iterations;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint analysis of groups of replicated experiments (AD, IPD-S, moderators)."};
  app.set_version_flag("--version", std::string(replimeta::kVersion));
  app.require_subcommand(1);
  app.fallthrough();

  Overrides o;
  app.add_option("--config", o.config_path, "Analysis config (JSON)")->check(CLI::ExistingFile);
  app.add_option("--out", o.out, "Output directory (overrides REPLIMETA_OUT_DIR and the config)");
  app.add_option("--alpha", o.alpha, "Significance level of the main analyses");
  app.add_option("--alpha-moderator", o.alpha_moderator,
                 "Significance level for flagging moderators");
  app.add_flag("--hedges,!--no-hedges", o.hedges, "Apply the small-sample correction to d");
  app.add_option("--df-rule", o.df_rule, "Mixed-model df rule")
      ->check(CLI::IsMember({"experiments-minus-1", "z"}));
  app.add_option("--seed", o.seed, "Simulation seed");
  app.add_option("--iterations", o.iterations, "Simulation iterations")->check(CLI::PositiveNumber);

  using Command = std::vector<std::filesystem::path> (*)(const replimeta::AnalysisConfig&);
  Command command = nullptr;
  const std::pair<const char*, std::pair<const char*, Command>> commands[] = {
      {"describe", {"Step 1: participant characteristics", replimeta::cmd_describe}},
      {"individual", {"Step 2: per-replication statistics and tests", replimeta::cmd_individual}},
      {"aggregate", {"Step 3: AD meta-analysis and IPD-S mixed model", replimeta::cmd_aggregate}},
      {"moderators", {"Step 4: experiment- and participant-level moderators", replimeta::cmd_moderators}},
      {"simulate", {"IPD-MT bias simulation", replimeta::cmd_simulate}},
      {"report", {"All steps plus report.md", replimeta::cmd_report}},
  };
  for (const auto& [name, entry] : commands) {
    auto* sub = app.add_subcommand(name, entry.first);
    const Command fn = entry.second;
    sub->callback([&command, fn] { command = fn; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const auto config = effective_config(o);
    for (const auto& path : command(config)) std::cout << path.generic_string() << '\n';
    return 0;
  } catch (const replimeta::StepError& e) {
    std::cerr << "replimeta: " << e.what() << '\n';
    return e.user_error() ? 1 : 2;
  } catch (const replimeta::ConfigError& e) {
    std::cerr << "replimeta: " << e.what() << '\n';
    return 1;
  } catch (const replimeta::DataError& e) {
    std::cerr << "replimeta: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "replimeta: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "replimeta: internal error: " << e.what() << '\n';
    return 2;
  }
}
