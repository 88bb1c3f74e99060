#pragma once

// The four analysis steps as commands, and the markdown report that strings
// them together. Each step produces a Section: ordered markdown blocks plus
// the CSV tables and SVG figures the blocks refer to. Every number in the
// report comes from one of those tables.

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "replimeta/config.hpp"
#include "replimeta/data.hpp"
#include "replimeta/svg.hpp"
#include "replimeta/table.hpp"

namespace replimeta {

inline constexpr std::string_view kVersion = "0.1.0";

inline constexpr std::string_view kGuideline6Text =
    "Guideline 6: results in this section are exploratory. Read them with three caveats.\n"
    "- Cause and effect: moderators were not randomized, so an interaction shows an "
    "association with the treatment effect, not that the moderator causes it.\n"
    "- Multiplicity: every extra moderator tested raises the chance of a spurious hit; "
    "the raised alpha makes this worse.\n"
    "- Confounding: a moderator may stand in for other characteristics that vary with it "
    "(age, other skills, site).";

/// A required input is not configured for the requested command.
class MissingInput : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// An analysis step failed; `user_error` tells bad input apart from a bug.
class StepError : public std::runtime_error {
 public:
  StepError(const std::string& what, bool user_error)
      : std::runtime_error(what), user_error_(user_error) {}
  bool user_error() const { return user_error_; }

 private:
  bool user_error_;
};

struct Inputs {
  std::optional<ReplicationSet> raw;
  std::optional<std::vector<SummaryRow>> summary;
  std::optional<CovariateTable> covariates;
  /// Input file -> FNV-1a-64 hash, for the provenance footer.
  std::map<std::string, std::string> hashes;
};

Inputs load_inputs(const AnalysisConfig& config);

struct Figure {
  std::string file;
  std::string caption;
  svg::Document document;
};

enum class StepKind { descriptive, confirmatory, exploratory, simulation };

struct Section {
  std::string title;
  StepKind kind = StepKind::descriptive;
  std::vector<std::string> blocks;
  std::vector<Table> tables;
  std::vector<Figure> figures;
  /// Written as CSV but too long to print in the report.
  std::vector<Table> data_files;

  void text(std::string block);
  void table(Table t);
  void figure(Figure f);
  std::string markdown() const;
};

Section step_describe(const AnalysisConfig& config, const Inputs& inputs);
Section step_individual(const AnalysisConfig& config, const Inputs& inputs);
Section step_aggregate(const AnalysisConfig& config, const Inputs& inputs);
Section step_moderators(const AnalysisConfig& config, const Inputs& inputs);
Section step_simulate(const AnalysisConfig& config);

/// Title, step sections, then the provenance footer (input hashes, config
/// echo, tool version). A pure function of its arguments.
std::string build_report(const AnalysisConfig& config, const Inputs& inputs,
                         const std::vector<Section>& sections,
                         const std::vector<std::string>& notes);

/// Writes the section's tables and figures into `dir`; returns the paths.
std::vector<std::filesystem::path> write_section(const Section& section,
                                                 const std::filesystem::path& dir);

std::vector<std::filesystem::path> cmd_describe(const AnalysisConfig& config);
std::vector<std::filesystem::path> cmd_individual(const AnalysisConfig& config);
std::vector<std::filesystem::path> cmd_aggregate(const AnalysisConfig& config);
std::vector<std::filesystem::path> cmd_moderators(const AnalysisConfig& config);
std::vector<std::filesystem::path> cmd_simulate(const AnalysisConfig& config);
/// Runs every step whose inputs are available and writes report.md.
std::vector<std::filesystem::path> cmd_report(const AnalysisConfig& config);

}  // namespace replimeta
