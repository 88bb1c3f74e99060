#pragma once

// Participant-level data model for a group of replications, plus the loaders
// for the three CSV inputs (raw outcomes, covariates, summary statistics).
//
//   raw:        experiment_id,participant_id,treatment,outcome
//   covariates: experiment_id,participant_id,subject_type,programming,java,unit_testing,junit
//   summary:    experiment_id,n_control,n_treatment,mean_control,sd_control,
//               mean_treatment,sd_treatment,corr,design
//
// All structures are immutable once validated.

#include <array>
#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace replimeta {

/// Input validation failure. `line()` is the 1-based source line when known.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what, std::size_t line = 0);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

enum class Arm { control, treatment };
enum class Design { within_subjects, between_subjects };

std::string_view to_string(Arm arm);
std::string_view to_string(Design design);
/// Accepts "within"/"within_subjects" and "between"/"between_subjects".
Design parse_design(std::string_view text);

struct Observation {
  std::string experiment_id;
  std::string participant_id;
  Arm arm = Arm::control;
  std::optional<double> outcome;

  friend bool operator==(const Observation&, const Observation&) = default;
};

struct PairedSample {
  std::string experiment_id;
  /// treatment - control, ordered by participant_id.
  std::vector<double> differences;
  std::vector<double> control;
  std::vector<double> treatment;
  std::size_t n_pairs = 0;
};

class Replication {
 public:
  Replication(std::string experiment_id, Design design, std::vector<Observation> observations);

  const std::string& experiment_id() const { return experiment_id_; }
  Design design() const { return design_; }
  const std::vector<Observation>& observations() const { return observations_; }

  /// Non-missing outcomes of one arm, in file order.
  std::vector<double> outcomes(Arm arm) const;
  /// Participant ids in first-appearance order.
  std::vector<std::string> participants() const;

  friend bool operator==(const Replication&, const Replication&) = default;

 private:
  std::string experiment_id_;
  Design design_;
  std::vector<Observation> observations_;
};

class ReplicationSet {
 public:
  /// Validates every invariant; throws DataError on violation.
  ReplicationSet(std::vector<Replication> replications, std::string outcome_name = "outcome",
                 std::string outcome_unit = "");

  const std::vector<Replication>& replications() const { return replications_; }
  const std::string& outcome_name() const { return outcome_name_; }
  const std::string& outcome_unit() const { return outcome_unit_; }
  std::size_t size() const { return replications_.size(); }

  const Replication* find(std::string_view experiment_id) const;
  bool has_participant(std::string_view experiment_id, std::string_view participant_id) const;
  /// Total non-missing observations across all replications.
  std::size_t observation_count() const;

  friend bool operator==(const ReplicationSet&, const ReplicationSet&) = default;

 private:
  std::vector<Replication> replications_;
  std::string outcome_name_;
  std::string outcome_unit_;
};

/// Maps the two treatment labels found in the raw file onto arms.
struct TreatmentLevels {
  std::string control = "control";
  std::string treatment = "treatment";
};

struct ParseOptions {
  TreatmentLevels levels;
  /// Per-experiment design; experiments not listed use `default_design`.
  std::map<std::string, Design> designs;
  Design default_design = Design::within_subjects;
  /// (experiment_id, participant_id) pairs dropped at load time.
  std::set<std::pair<std::string, std::string>> excluded;
  std::string outcome_name = "outcome";
  std::string outcome_unit;
};

ReplicationSet parse_raw_dataset(std::istream& in, const ParseOptions& options = {});
ReplicationSet load_raw_dataset(const std::filesystem::path& path,
                                const ParseOptions& options = {});
/// Writes the long-format raw CSV; a missing outcome is an empty cell.
void write_raw_dataset(std::ostream& out, const ReplicationSet& data,
                       const TreatmentLevels& levels = {});

/// Participants with both arms observed. Throws DataError for
/// between-subjects replications or fewer than 2 complete pairs.
PairedSample complete_pairs(const Replication& replication);

// ---------------------------------------------------------------------------
// Summary statistics

struct SummaryRow {
  std::string experiment_id;
  std::size_t n_control = 0;
  std::size_t n_treatment = 0;
  double mean_control = 0.0;
  double mean_treatment = 0.0;
  double sd_control = 0.0;
  double sd_treatment = 0.0;
  /// Paired correlation; present iff the design is within-subjects.
  std::optional<double> corr;
  Design design = Design::within_subjects;
  /// Only available when computed from raw data.
  std::optional<double> median_control;
  std::optional<double> median_treatment;

  /// Throws DataError when an invariant does not hold.
  void validate() const;
};

std::vector<SummaryRow> parse_summary_dataset(std::istream& in);
std::vector<SummaryRow> load_summary_dataset(const std::filesystem::path& path);
void write_summary_dataset(std::ostream& out, const std::vector<SummaryRow>& rows);

// ---------------------------------------------------------------------------
// Covariates

enum class SubjectType { professional, student };
enum class Covariate { programming, java, unit_testing, junit };

inline constexpr std::array<Covariate, 4> kAllCovariates = {
    Covariate::programming, Covariate::java, Covariate::unit_testing, Covariate::junit};

std::string_view to_string(SubjectType type);
std::string_view to_string(Covariate covariate);
/// Human-readable label used in tables ("Unit testing").
std::string_view display_name(Covariate covariate);
Covariate parse_covariate(std::string_view text);

struct CovariateRow {
  std::string experiment_id;
  std::string participant_id;
  SubjectType subject_type = SubjectType::professional;
  int programming = 1;
  int java = 1;
  int unit_testing = 1;
  int junit = 1;

  int value(Covariate covariate) const;
};

class CovariateTable {
 public:
  explicit CovariateTable(std::vector<CovariateRow> rows);

  const std::vector<CovariateRow>& rows() const { return rows_; }
  const CovariateRow* find(std::string_view experiment_id, std::string_view participant_id) const;
  /// Experiment ids in first-appearance order.
  std::vector<std::string> experiments() const;

 private:
  std::vector<CovariateRow> rows_;
};

/// Validates ordinal ranges and that every row refers to a participant of
/// `data`; orphan rows are an error naming the participant.
CovariateTable parse_covariates(std::istream& in, const ReplicationSet& data);
CovariateTable load_covariates(const std::filesystem::path& path, const ReplicationSet& data);

}  // namespace replimeta
