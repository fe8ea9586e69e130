#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "taxonap/taxonomy.hpp"

namespace taxonap {

// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

// Accepts `YYYY-MM-DD`, `YYYY-MM-DD HH:MM[:SS]` and `YYYY-MM-DDTHH:MM[:SS]`
// with an optional trailing `Z`. Throws InvalidArgument.
Timestamp parse_timestamp(std::string_view text);
// `YYYY-MM-DDTHH:MM:SS`
std::string format_timestamp(Timestamp ts);

struct Event {
  std::string event_id;
  std::string code;
  std::string taxonomy_id;  // procedure taxonomy, or "END" for the sentinel
  Timestamp timestamp = 0;
  int seq_num = 1;

  bool is_end() const { return code == kEndActivity; }
};

struct Diagnosis {
  std::string code;
  int seq = 1;

  friend bool operator==(const Diagnosis&, const Diagnosis&) = default;
};

struct Case {
  std::string case_id;
  std::vector<Diagnosis> diagnoses;  // priority order, seq 1 = primary
  std::vector<Event> trace;          // ends with END
  Timestamp admit_time = 0;

  // Number of procedure events (END excluded).
  std::size_t procedure_count() const;
  // Activity codes of the whole trace, END included.
  std::vector<std::string> activities() const;
  const Diagnosis* primary() const;
};

struct EventLog {
  std::string id;  // primary-diagnosis category, e.g. "I21"
  std::string diagnosis_taxonomy;
  std::string procedure_taxonomy;
  std::vector<Case> cases;

  const Case* find(std::string_view case_id) const;
};

// Checks the per-case and per-log invariants; throws DataError naming the
// first violation.
void validate(const EventLog& log);

// ---------------------------------------------------------------------------
// Ingestion

struct DiagnosisRecord {
  std::string case_id;
  std::string code;
  int seq_num = 0;
};

struct ProcedureRecord {
  std::string case_id;
  std::string code;
  Timestamp timestamp = 0;
  int seq_num = 0;
};

enum class UnknownCodePolicy { kDrop, kFail };

struct BuildOptions {
  std::size_t min_cases = 500;
  std::size_t max_diagnoses = 10;
  std::string diagnosis_taxonomy = "icd10cm";
  std::string procedure_taxonomy = "icd10pcs";
  // Optional membership checks; null skips validation.
  const Taxonomy* diagnosis_codes = nullptr;
  const Taxonomy* procedure_codes = nullptr;
  UnknownCodePolicy unknown_codes = UnknownCodePolicy::kDrop;
};

struct CategorySummary {
  std::string category;
  std::size_t cases = 0;
  bool kept = false;
};

struct BuildSummary {
  std::size_t input_cases = 0;
  std::size_t dropped_no_procedures = 0;
  std::size_t dropped_missing_primary = 0;
  std::size_t dropped_unknown_code_records = 0;
  std::size_t truncated_diagnoses = 0;
  std::vector<CategorySummary> categories;  // sorted by category
  std::vector<std::string> warnings;
};

struct BuildResult {
  std::map<std::string, EventLog> logs;  // keyed by category
  BuildSummary summary;
};

// Builds one event log per primary-diagnosis category:
// keeps diagnoses with seq_num <= max_diagnoses, drops cases without
// procedures or without a seq_num 1 diagnosis, orders procedures by
// (timestamp, seq_num, code), appends END one second after the last
// procedure, groups by the first three characters of the primary diagnosis
// and discards groups smaller than min_cases.
BuildResult build_logs(std::span<const DiagnosisRecord> diagnoses,
                       std::span<const ProcedureRecord> procedures, const BuildOptions& options);

// ---------------------------------------------------------------------------
// Prefix expansion and statistics

struct PrefixInstance {
  std::vector<Event> prefix;
  Event target;
};

// ([e1..ek], e(k+1)) for k = 1..|trace|-1. Throws InvalidArgument
// (TraceTooShort) when the trace has fewer than two events.
std::vector<PrefixInstance> prefixes(const Case& c);

struct LogStats {
  std::size_t n_traces = 0;
  std::size_t n_trace_variants = 0;
  std::size_t n_unique_events = 0;
  std::size_t n_unique_diagnoses = 0;
  double mean_trace_length = 0.0;
  double std_trace_length = 0.0;  // population standard deviation
};

// Lengths and unique events exclude END. Throws DataError on an empty log.
LogStats stats(const EventLog& log);

// ---------------------------------------------------------------------------
// Interchange formats

// procedures: case_id,code,timestamp,seq_num
// diagnoses:  case_id,code,seq_num
// Both require the header row. Throws MalformedLine.
std::vector<ProcedureRecord> read_procedures_csv(std::string_view text);
std::vector<DiagnosisRecord> read_diagnoses_csv(std::string_view text);
std::string write_procedures_csv(std::span<const EventLog> logs);
std::string write_diagnoses_csv(std::span<const EventLog> logs);

// {id, diagnosis_taxonomy, procedure_taxonomy,
//  cases:[{case_id, admit_time, diagnoses:[{code,seq}], events:[{code,ts,seq}]}]}
std::string to_json(const EventLog& log);
EventLog event_log_from_json(std::string_view text);
EventLog load_event_log(const std::filesystem::path& path);

}  // namespace taxonap
