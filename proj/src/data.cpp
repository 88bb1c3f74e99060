#include "replimeta/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include <fmt/format.h>

#include "replimeta/csv.hpp"

namespace replimeta {

namespace {

const std::vector<std::string> kRawHeader = {"experiment_id", "participant_id", "treatment",
                                             "outcome"};
const std::vector<std::string> kSummaryHeader = {
    "experiment_id", "n_control",      "n_treatment",  "mean_control", "sd_control",
    "mean_treatment", "sd_treatment", "corr",         "design"};
const std::vector<std::string> kCovariateHeader = {
    "experiment_id", "participant_id", "subject_type", "programming",
    "java",          "unit_testing",   "junit"};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

void check_header(const csv::Record& header, const std::vector<std::string>& expected,
                  std::string_view what) {
  std::vector<std::string> got;
  for (const auto& f : header.fields) got.push_back(lower(f));
  if (got != expected) {
    std::string joined;
    for (const auto& e : expected) joined += (joined.empty() ? "" : ",") + e;
    throw DataError(fmt::format("{} header must be '{}'", what, joined), header.line);
  }
}

double parse_real(const std::string& text, std::size_t line, std::string_view column) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  if (!text.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw DataError(fmt::format("column '{}': '{}' is not a number", column, text), line);
  }
  if (!std::isfinite(value)) {
    throw DataError(fmt::format("column '{}': non-finite value '{}'", column, text), line);
  }
  return value;
}

long long parse_integer(const std::string& text, std::size_t line, std::string_view column) {
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw DataError(fmt::format("column '{}': '{}' is not an integer", column, text), line);
  }
  return value;
}

std::vector<csv::Record> read_records(std::istream& in) {
  try {
    return csv::read(in);
  } catch (const std::runtime_error& e) {
    throw DataError(e.what());
  }
}

std::ifstream open(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  return in;
}

}  // namespace

DataError::DataError(const std::string& what, std::size_t line)
    : std::runtime_error(line > 0 ? fmt::format("line {}: {}", line, what) : what), line_(line) {}

std::string_view to_string(Arm arm) { return arm == Arm::control ? "control" : "treatment"; }

std::string_view to_string(Design design) {
  return design == Design::within_subjects ? "within" : "between";
}

Design parse_design(std::string_view text) {
  const auto t = lower(text);
  if (t == "within" || t == "within_subjects") return Design::within_subjects;
  if (t == "between" || t == "between_subjects") return Design::between_subjects;
  throw DataError(fmt::format("unknown design '{}' (expected within or between)", text));
}

// ---------------------------------------------------------------------------

Replication::Replication(std::string experiment_id, Design design,
                         std::vector<Observation> observations)
    : experiment_id_(std::move(experiment_id)),
      design_(design),
      observations_(std::move(observations)) {}

std::vector<double> Replication::outcomes(Arm arm) const {
  std::vector<double> out;
  for (const auto& o : observations_) {
    if (o.arm == arm && o.outcome) out.push_back(*o.outcome);
  }
  return out;
}

std::vector<std::string> Replication::participants() const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& o : observations_) {
    if (seen.insert(o.participant_id).second) out.push_back(o.participant_id);
  }
  return out;
}

ReplicationSet::ReplicationSet(std::vector<Replication> replications, std::string outcome_name,
                               std::string outcome_unit)
    : replications_(std::move(replications)),
      outcome_name_(std::move(outcome_name)),
      outcome_unit_(std::move(outcome_unit)) {
  if (replications_.empty()) throw DataError("no replications");
  std::set<std::string> ids;
  for (const auto& rep : replications_) {
    if (!ids.insert(rep.experiment_id()).second) {
      throw DataError(fmt::format("experiment '{}' appears twice", rep.experiment_id()));
    }
    std::set<std::pair<std::string, Arm>> triples;
    std::map<std::string, int> arms_per_participant;
    std::set<std::string> with_outcome;
    for (const auto& o : rep.observations()) {
      if (o.experiment_id != rep.experiment_id()) {
        throw DataError(fmt::format("observation for '{}' filed under experiment '{}'",
                                    o.experiment_id, rep.experiment_id()));
      }
      if (!triples.insert({o.participant_id, o.arm}).second) {
        throw DataError(fmt::format("duplicate observation ({}, {}, {})", o.experiment_id,
                                    o.participant_id, to_string(o.arm)));
      }
      if (o.outcome && !std::isfinite(*o.outcome)) {
        throw DataError(fmt::format("non-finite outcome for ({}, {})", o.experiment_id,
                                    o.participant_id));
      }
      ++arms_per_participant[o.participant_id];
      if (o.outcome) with_outcome.insert(o.participant_id);
    }
    if (rep.design() == Design::between_subjects) {
      for (const auto& [pid, count] : arms_per_participant) {
        if (count > 1) {
          throw DataError(fmt::format(
              "participant '{}' of between-subjects experiment '{}' appears in both arms", pid,
              rep.experiment_id()));
        }
      }
    }
    if (with_outcome.size() < 2) {
      throw DataError(fmt::format(
          "experiment '{}' needs at least 2 participants with an observed outcome",
          rep.experiment_id()));
    }
  }
}

const Replication* ReplicationSet::find(std::string_view experiment_id) const {
  for (const auto& rep : replications_) {
    if (rep.experiment_id() == experiment_id) return &rep;
  }
  return nullptr;
}

bool ReplicationSet::has_participant(std::string_view experiment_id,
                                     std::string_view participant_id) const {
  const auto* rep = find(experiment_id);
  if (rep == nullptr) return false;
  return std::any_of(rep->observations().begin(), rep->observations().end(),
                     [&](const Observation& o) { return o.participant_id == participant_id; });
}

std::size_t ReplicationSet::observation_count() const {
  std::size_t n = 0;
  for (const auto& rep : replications_) {
    for (const auto& o : rep.observations()) n += o.outcome.has_value();
  }
  return n;
}

// ---------------------------------------------------------------------------

ReplicationSet parse_raw_dataset(std::istream& in, const ParseOptions& options) {
  const auto records = read_records(in);
  if (records.empty()) throw DataError("no data rows");
  check_header(records.front(), kRawHeader, "raw data");
  if (records.size() == 1) throw DataError("no data rows");
  if (options.levels.control == options.levels.treatment) {
    throw DataError("control and treatment labels must differ");
  }

  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<Observation>> grouped;
  std::set<std::tuple<std::string, std::string, Arm>> seen;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != kRawHeader.size()) {
      throw DataError(fmt::format("expected {} fields, found {}", kRawHeader.size(),
                                  rec.fields.size()),
                      rec.line);
    }
    Observation o;
    o.experiment_id = rec.fields[0];
    o.participant_id = rec.fields[1];
    if (o.experiment_id.empty() || o.participant_id.empty()) {
      throw DataError("experiment_id and participant_id must be non-empty", rec.line);
    }
    const auto& label = rec.fields[2];
    if (label == options.levels.control) {
      o.arm = Arm::control;
    } else if (label == options.levels.treatment) {
      o.arm = Arm::treatment;
    } else {
      throw DataError(fmt::format("unknown treatment label '{}' (declared: '{}', '{}')", label,
                                  options.levels.control, options.levels.treatment),
                      rec.line);
    }
    if (!rec.fields[3].empty()) {
      const auto t = lower(rec.fields[3]);
      if (t == "na") {
        // missing
      } else {
        o.outcome = parse_real(rec.fields[3], rec.line, "outcome");
      }
    }
    if (!seen.insert({o.experiment_id, o.participant_id, o.arm}).second) {
      throw DataError(fmt::format("duplicate observation ({}, {}, {})", o.experiment_id,
                                  o.participant_id, label),
                      rec.line);
    }
    if (options.excluded.contains({o.experiment_id, o.participant_id})) continue;
    if (!grouped.contains(o.experiment_id)) order.push_back(o.experiment_id);
    grouped[o.experiment_id].push_back(std::move(o));
  }

  std::vector<Replication> reps;
  for (const auto& id : order) {
    const auto it = options.designs.find(id);
    const Design design = it != options.designs.end() ? it->second : options.default_design;
    reps.emplace_back(id, design, std::move(grouped[id]));
  }
  return ReplicationSet(std::move(reps), options.outcome_name, options.outcome_unit);
}

ReplicationSet load_raw_dataset(const std::filesystem::path& path, const ParseOptions& options) {
  auto in = open(path);
  return parse_raw_dataset(in, options);
}

void write_raw_dataset(std::ostream& out, const ReplicationSet& data,
                       const TreatmentLevels& levels) {
  csv::write_row(out, kRawHeader);
  for (const auto& rep : data.replications()) {
    for (const auto& o : rep.observations()) {
      csv::write_row(out, {o.experiment_id, o.participant_id,
                           o.arm == Arm::control ? levels.control : levels.treatment,
                           o.outcome ? csv::format_exact(*o.outcome) : std::string()});
    }
  }
}

PairedSample complete_pairs(const Replication& replication) {
  if (replication.design() != Design::within_subjects) {
    throw DataError(fmt::format("experiment '{}' is not a within-subjects design",
                                replication.experiment_id()));
  }
  std::map<std::string, std::pair<std::optional<double>, std::optional<double>>> arms;
  for (const auto& o : replication.observations()) {
    auto& slot = arms[o.participant_id];
    (o.arm == Arm::control ? slot.first : slot.second) = o.outcome;
  }
  PairedSample out;
  out.experiment_id = replication.experiment_id();
  for (const auto& [pid, pair] : arms) {  // std::map: sorted by participant id
    if (pair.first && pair.second) {
      out.control.push_back(*pair.first);
      out.treatment.push_back(*pair.second);
      out.differences.push_back(*pair.second - *pair.first);
    }
  }
  out.n_pairs = out.differences.size();
  if (out.n_pairs < 2) {
    throw DataError(fmt::format("experiment '{}' has {} complete pair(s); at least 2 needed",
                                replication.experiment_id(), out.n_pairs));
  }
  return out;
}

// ---------------------------------------------------------------------------

void SummaryRow::validate() const {
  if (experiment_id.empty()) throw DataError("summary row without experiment_id");
  if (n_control < 2 || n_treatment < 2) {
    throw DataError(fmt::format("'{}': each arm needs n >= 2", experiment_id));
  }
  if (!std::isfinite(mean_control) || !std::isfinite(mean_treatment) ||
      !std::isfinite(sd_control) || !std::isfinite(sd_treatment)) {
    throw DataError(fmt::format("'{}': non-finite summary statistic", experiment_id));
  }
  if (sd_control < 0.0 || sd_treatment < 0.0) {
    throw DataError(fmt::format("'{}': standard deviations must be >= 0", experiment_id));
  }
  if (design == Design::within_subjects && !corr) {
    throw DataError(fmt::format("'{}': within-subjects row requires corr", experiment_id));
  }
  if (design == Design::between_subjects && corr) {
    throw DataError(fmt::format("'{}': between-subjects row must leave corr empty",
                                experiment_id));
  }
  if (corr && !(*corr >= -1.0 && *corr <= 1.0)) {
    throw DataError(fmt::format("'{}': corr {} outside [-1, 1]", experiment_id, *corr));
  }
}

std::vector<SummaryRow> parse_summary_dataset(std::istream& in) {
  const auto records = read_records(in);
  if (records.empty()) throw DataError("no data rows");
  check_header(records.front(), kSummaryHeader, "summary");
  if (records.size() == 1) throw DataError("no data rows");
  std::vector<SummaryRow> rows;
  std::set<std::string> ids;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    const auto& f = rec.fields;
    if (f.size() != kSummaryHeader.size()) {
      throw DataError(fmt::format("expected {} fields, found {}", kSummaryHeader.size(),
                                  f.size()),
                      rec.line);
    }
    SummaryRow row;
    row.experiment_id = f[0];
    const auto nc = parse_integer(f[1], rec.line, "n_control");
    const auto nt = parse_integer(f[2], rec.line, "n_treatment");
    if (nc < 2 || nt < 2) throw DataError("n_control and n_treatment must be >= 2", rec.line);
    row.n_control = static_cast<std::size_t>(nc);
    row.n_treatment = static_cast<std::size_t>(nt);
    row.mean_control = parse_real(f[3], rec.line, "mean_control");
    row.sd_control = parse_real(f[4], rec.line, "sd_control");
    row.mean_treatment = parse_real(f[5], rec.line, "mean_treatment");
    row.sd_treatment = parse_real(f[6], rec.line, "sd_treatment");
    if (!f[7].empty()) row.corr = parse_real(f[7], rec.line, "corr");
    try {
      row.design = parse_design(f[8]);
      row.validate();
    } catch (const DataError& e) {
      throw DataError(e.what(), rec.line);
    }
    if (!ids.insert(row.experiment_id).second) {
      throw DataError(fmt::format("experiment '{}' listed twice", row.experiment_id), rec.line);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<SummaryRow> load_summary_dataset(const std::filesystem::path& path) {
  auto in = open(path);
  return parse_summary_dataset(in);
}

void write_summary_dataset(std::ostream& out, const std::vector<SummaryRow>& rows) {
  csv::write_row(out, kSummaryHeader);
  for (const auto& r : rows) {
    csv::write_row(out, {r.experiment_id, std::to_string(r.n_control),
                         std::to_string(r.n_treatment), csv::format_exact(r.mean_control),
                         csv::format_exact(r.sd_control), csv::format_exact(r.mean_treatment),
                         csv::format_exact(r.sd_treatment),
                         r.corr ? csv::format_exact(*r.corr) : std::string(),
                         std::string(to_string(r.design))});
  }
}

// ---------------------------------------------------------------------------

std::string_view to_string(SubjectType type) {
  return type == SubjectType::professional ? "professional" : "student";
}

std::string_view to_string(Covariate covariate) {
  switch (covariate) {
    case Covariate::programming: return "programming";
    case Covariate::java: return "java";
    case Covariate::unit_testing: return "unit_testing";
    case Covariate::junit: return "junit";
  }
  return "";
}

std::string_view display_name(Covariate covariate) {
  switch (covariate) {
    case Covariate::programming: return "Programming";
    case Covariate::java: return "Java";
    case Covariate::unit_testing: return "Unit testing";
    case Covariate::junit: return "JUnit";
  }
  return "";
}

Covariate parse_covariate(std::string_view text) {
  const auto t = lower(text);
  for (const auto c : kAllCovariates) {
    if (t == to_string(c)) return c;
  }
  if (t == "unit" || t == "unit-testing") return Covariate::unit_testing;
  throw DataError(fmt::format("unknown covariate '{}'", text));
}

int CovariateRow::value(Covariate covariate) const {
  switch (covariate) {
    case Covariate::programming: return programming;
    case Covariate::java: return java;
    case Covariate::unit_testing: return unit_testing;
    case Covariate::junit: return junit;
  }
  return 0;
}

CovariateTable::CovariateTable(std::vector<CovariateRow> rows) : rows_(std::move(rows)) {
  std::set<std::pair<std::string, std::string>> keys;
  for (const auto& r : rows_) {
    if (!keys.insert({r.experiment_id, r.participant_id}).second) {
      throw DataError(fmt::format("duplicate covariate row ({}, {})", r.experiment_id,
                                  r.participant_id));
    }
    for (const auto c : kAllCovariates) {
      const int v = r.value(c);
      if (v < 1 || v > 4) {
        throw DataError(fmt::format("({}, {}): {} = {} outside 1..4", r.experiment_id,
                                    r.participant_id, to_string(c), v));
      }
    }
  }
}

const CovariateRow* CovariateTable::find(std::string_view experiment_id,
                                         std::string_view participant_id) const {
  for (const auto& r : rows_) {
    if (r.experiment_id == experiment_id && r.participant_id == participant_id) return &r;
  }
  return nullptr;
}

std::vector<std::string> CovariateTable::experiments() const {
  std::vector<std::string> out;
  for (const auto& r : rows_) {
    if (std::find(out.begin(), out.end(), r.experiment_id) == out.end()) {
      out.push_back(r.experiment_id);
    }
  }
  return out;
}

CovariateTable parse_covariates(std::istream& in, const ReplicationSet& data) {
  const auto records = read_records(in);
  if (records.empty()) throw DataError("no data rows");
  check_header(records.front(), kCovariateHeader, "covariates");
  if (records.size() == 1) throw DataError("no data rows");
  std::vector<CovariateRow> rows;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    const auto& f = rec.fields;
    if (f.size() != kCovariateHeader.size()) {
      throw DataError(fmt::format("expected {} fields, found {}", kCovariateHeader.size(),
                                  f.size()),
                      rec.line);
    }
    CovariateRow row;
    row.experiment_id = f[0];
    row.participant_id = f[1];
    const auto type = lower(f[2]);
    if (type == "professional") {
      row.subject_type = SubjectType::professional;
    } else if (type == "student") {
      row.subject_type = SubjectType::student;
    } else {
      throw DataError(fmt::format("subject_type '{}' must be professional or student", f[2]),
                      rec.line);
    }
    int* slots[] = {&row.programming, &row.java, &row.unit_testing, &row.junit};
    for (std::size_t k = 0; k < 4; ++k) {
      const auto v = parse_integer(f[3 + k], rec.line, kCovariateHeader[3 + k]);
      if (v < 1 || v > 4) {
        throw DataError(fmt::format("{} = {} outside the ordinal range 1..4",
                                    kCovariateHeader[3 + k], v),
                        rec.line);
      }
      *slots[k] = static_cast<int>(v);
    }
    if (!data.has_participant(row.experiment_id, row.participant_id)) {
      throw DataError(fmt::format("participant '{}' of experiment '{}' is not in the raw data",
                                  row.participant_id, row.experiment_id),
                      rec.line);
    }
    rows.push_back(std::move(row));
  }
  try {
    return CovariateTable(std::move(rows));
  } catch (const DataError&) {
    throw;
  }
}

CovariateTable load_covariates(const std::filesystem::path& path, const ReplicationSet& data) {
  auto in = open(path);
  return parse_covariates(in, data);
}

}  // namespace replimeta
