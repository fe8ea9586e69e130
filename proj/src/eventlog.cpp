#include "taxonap/eventlog.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "taxonap/errors.hpp"
#include "taxonap/icd10.hpp"
#include "text_util.hpp"

namespace taxonap {

namespace {

using json = nlohmann::ordered_json;

// Howard Hinnant's civil-calendar conversions.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y += m <= 2;
}

std::vector<std::string> parse_csv_line(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current += ch;
    }
  }
  if (quoted) throw MalformedLine(line_no, "unterminated quoted field");
  fields.push_back(std::move(current));
  for (auto& f : fields) f = std::string(detail::trim(f));
  return fields;
}

template <typename Row>
std::vector<Row> read_csv(std::string_view text, std::span<const std::string_view> header,
                          Row (*convert)(const std::vector<std::string>&, std::size_t)) {
  std::vector<Row> rows;
  std::size_t line_no = 0;
  bool seen_header = false;
  for (std::string_view line : detail::split_lines(text)) {
    ++line_no;
    line = detail::rstrip(line);
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.remove_prefix(3);
    if (line.empty()) continue;
    auto fields = parse_csv_line(line, line_no);
    if (!seen_header) {
      if (fields.size() != header.size() || !std::equal(fields.begin(), fields.end(), header.begin())) {
        std::string expected;
        for (auto h : header) expected += (expected.empty() ? "" : ",") + std::string(h);
        throw MalformedLine(line_no, "expected header '" + expected + "'");
      }
      seen_header = true;
      continue;
    }
    if (fields.size() != header.size()) {
      throw MalformedLine(line_no, "expected " + std::to_string(header.size()) + " fields");
    }
    rows.push_back(convert(fields, line_no));
  }
  if (!seen_header) throw MalformedLine(line_no == 0 ? 1 : line_no, "missing header row");
  return rows;
}

int parse_seq(const std::string& field, std::size_t line_no) {
  auto seq = detail::parse_int<int>(field);
  if (!seq || *seq < 1) throw MalformedLine(line_no, "seq_num must be a positive integer");
  return *seq;
}

ProcedureRecord to_procedure(const std::vector<std::string>& f, std::size_t line_no) {
  if (f[0].empty() || f[1].empty()) throw MalformedLine(line_no, "empty case_id or code");
  ProcedureRecord r;
  r.case_id = f[0];
  r.code = f[1];
  try {
    r.timestamp = parse_timestamp(f[2]);
  } catch (const InvalidArgument& e) {
    throw MalformedLine(line_no, e.what());
  }
  r.seq_num = parse_seq(f[3], line_no);
  return r;
}

DiagnosisRecord to_diagnosis(const std::vector<std::string>& f, std::size_t line_no) {
  if (f[0].empty() || f[1].empty()) throw MalformedLine(line_no, "empty case_id or code");
  return {f[0], f[1], parse_seq(f[2], line_no)};
}

constexpr std::string_view kProcedureHeader[] = {"case_id", "code", "timestamp", "seq_num"};
constexpr std::string_view kDiagnosisHeader[] = {"case_id", "code", "seq_num"};

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

Event end_event(const std::string& case_id, Timestamp ts) {
  return Event{case_id + ":END", std::string(kEndActivity), std::string(kEndActivity), ts, 1};
}

bool event_before(const Event& a, const Event& b) {
  if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
  if (a.seq_num != b.seq_num) return a.seq_num < b.seq_num;
  return a.code < b.code;
}

}  // namespace

// ---------------------------------------------------------------------------
// Timestamps

Timestamp parse_timestamp(std::string_view text) {
  text = detail::trim(text);
  if (!text.empty() && text.back() == 'Z') text.remove_suffix(1);
  auto fail = [&]() -> InvalidArgument {
    return InvalidArgument("invalid timestamp '" + std::string(text) + "'");
  };
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') throw fail();
  auto year = detail::parse_int<int>(text.substr(0, 4));
  auto month = detail::parse_int<unsigned>(text.substr(5, 2));
  auto day = detail::parse_int<unsigned>(text.substr(8, 2));
  if (!year || !month || !day || *month < 1 || *month > 12 || *day < 1 || *day > 31) throw fail();
  unsigned hh = 0, mm = 0, ss = 0;
  if (text.size() > 10) {
    if ((text[10] != 'T' && text[10] != ' ') || text.size() < 16 || text[13] != ':') throw fail();
    auto h = detail::parse_int<unsigned>(text.substr(11, 2));
    auto m = detail::parse_int<unsigned>(text.substr(14, 2));
    if (!h || !m || *h > 23 || *m > 59) throw fail();
    hh = *h;
    mm = *m;
    if (text.size() > 16) {
      if (text[16] != ':' || text.size() < 19) throw fail();
      auto s = detail::parse_int<unsigned>(text.substr(17, 2));
      if (!s || *s > 60) throw fail();
      ss = *s;
      // Fractional seconds are truncated.
      if (text.size() > 19 && text[19] != '.') throw fail();
    }
  }
  const std::int64_t days = days_from_civil(*year, *month, *day);
  return days * 86400 + hh * 3600 + mm * 60 + ss;
}

std::string format_timestamp(Timestamp ts) {
  std::int64_t days = ts / 86400;
  std::int64_t secs = ts % 86400;
  if (secs < 0) {
    secs += 86400;
    --days;
  }
  std::int64_t y;
  unsigned m, d;
  civil_from_days(days, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02lld:%02lld:%02lld", static_cast<long long>(y), m,
                d, static_cast<long long>(secs / 3600), static_cast<long long>((secs / 60) % 60),
                static_cast<long long>(secs % 60));
  return buf;
}

// ---------------------------------------------------------------------------
// Case / EventLog

std::size_t Case::procedure_count() const {
  return static_cast<std::size_t>(
      std::count_if(trace.begin(), trace.end(), [](const Event& e) { return !e.is_end(); }));
}

std::vector<std::string> Case::activities() const {
  std::vector<std::string> out;
  out.reserve(trace.size());
  for (const auto& e : trace) out.push_back(e.code);
  return out;
}

const Diagnosis* Case::primary() const {
  for (const auto& d : diagnoses) {
    if (d.seq == 1) return &d;
  }
  return nullptr;
}

const Case* EventLog::find(std::string_view case_id) const {
  for (const auto& c : cases) {
    if (c.case_id == case_id) return &c;
  }
  return nullptr;
}

void validate(const EventLog& log) {
  std::unordered_set<std::string> event_ids;
  std::unordered_set<std::string> case_ids;
  std::optional<std::string> category;
  for (const auto& c : log.cases) {
    const std::string where = "case '" + c.case_id + "'";
    if (c.case_id.empty()) throw DataError("empty case_id in log '" + log.id + "'");
    if (!case_ids.insert(c.case_id).second) throw DataError("duplicate " + where);
    if (c.trace.empty()) throw DataError(where + " has an empty trace");
    if (!c.trace.back().is_end()) throw DataError(where + " does not end with END");
    for (std::size_t i = 0; i < c.trace.size(); ++i) {
      const auto& e = c.trace[i];
      if (e.is_end() && i + 1 != c.trace.size()) throw DataError(where + " has END before the end");
      if (e.code.empty()) throw DataError(where + " has an event without a code");
      if (e.seq_num < 1) throw DataError(where + " has a non-positive seq_num");
      if (i > 0 && event_before(e, c.trace[i - 1])) throw DataError(where + " is not time ordered");
      if (!event_ids.insert(e.event_id).second) {
        throw DataError("event id '" + e.event_id + "' is not unique in log '" + log.id + "'");
      }
    }
    if (c.diagnoses.empty() || c.diagnoses.size() > 10) {
      throw DataError(where + " must carry between 1 and 10 diagnoses");
    }
    for (std::size_t i = 0; i < c.diagnoses.size(); ++i) {
      const auto& d = c.diagnoses[i];
      if (d.seq < 1 || d.seq > 10) throw DataError(where + " has a diagnosis seq outside 1..10");
      if (i > 0 && d.seq <= c.diagnoses[i - 1].seq) {
        throw DataError(where + " diagnoses are not in strictly increasing seq order");
      }
    }
    const Diagnosis* primary = c.primary();
    if (primary == nullptr) throw DataError(where + " has no primary diagnosis (seq 1)");
    const std::string cat = primary->code.substr(0, 3);
    if (!category) {
      category = cat;
    } else if (*category != cat) {
      throw DataError("log '" + log.id + "' mixes primary-diagnosis categories " + *category +
                      " and " + cat);
    }
  }
}

// ---------------------------------------------------------------------------
// build_logs

BuildResult build_logs(std::span<const DiagnosisRecord> diagnoses,
                       std::span<const ProcedureRecord> procedures, const BuildOptions& options) {
  BuildResult result;
  auto& summary = result.summary;

  auto unknown = [&](const Taxonomy* tax, const std::string& code) {
    if (tax == nullptr || tax->contains(code)) return false;
    if (options.unknown_codes == UnknownCodePolicy::kFail) throw UnknownConcept(tax->id(), code);
    ++summary.dropped_unknown_code_records;
    return true;
  };

  std::map<std::string, std::vector<Diagnosis>> diag_by_case;
  std::map<std::string, std::vector<Event>> proc_by_case;
  std::set<std::string> truncated;
  for (const auto& r : diagnoses) {
    auto& list = diag_by_case[r.case_id];
    if (r.seq_num > static_cast<int>(options.max_diagnoses)) {
      truncated.insert(r.case_id);
      continue;
    }
    if (unknown(options.diagnosis_codes, r.code)) continue;
    if (std::any_of(list.begin(), list.end(), [&](const Diagnosis& d) { return d.seq == r.seq_num; })) {
      summary.warnings.push_back("case " + r.case_id + ": duplicate diagnosis seq_num " +
                                 std::to_string(r.seq_num) + " ignored");
      continue;
    }
    list.push_back({r.code, r.seq_num});
  }
  for (const auto& r : procedures) {
    auto& list = proc_by_case[r.case_id];
    if (unknown(options.procedure_codes, r.code)) continue;
    list.push_back(Event{"", r.code, options.procedure_taxonomy, r.timestamp, r.seq_num});
  }
  summary.truncated_diagnoses = truncated.size();

  std::set<std::string> all_ids;
  for (const auto& [id, _] : diag_by_case) all_ids.insert(id);
  for (const auto& [id, _] : proc_by_case) all_ids.insert(id);
  summary.input_cases = all_ids.size();

  std::map<std::string, std::vector<Case>> by_category;
  for (const auto& case_id : all_ids) {
    auto proc_it = proc_by_case.find(case_id);
    if (proc_it == proc_by_case.end() || proc_it->second.empty()) {
      ++summary.dropped_no_procedures;
      continue;
    }
    auto diag_it = diag_by_case.find(case_id);
    std::vector<Diagnosis> diags = diag_it == diag_by_case.end() ? std::vector<Diagnosis>{}
                                                                 : diag_it->second;
    std::sort(diags.begin(), diags.end(), [](const auto& a, const auto& b) { return a.seq < b.seq; });
    if (diags.empty() || diags.front().seq != 1) {
      ++summary.dropped_missing_primary;
      summary.warnings.push_back("case " + case_id + ": no primary diagnosis (seq_num 1); dropped");
      continue;
    }

    Case c;
    c.case_id = case_id;
    c.diagnoses = std::move(diags);
    auto events = proc_it->second;
    std::stable_sort(events.begin(), events.end(), event_before);
    for (std::size_t i = 0; i < events.size(); ++i) {
      events[i].event_id = case_id + ":" + std::to_string(i + 1);
    }
    c.admit_time = events.front().timestamp;
    const Timestamp last = events.back().timestamp;
    events.push_back(end_event(case_id, last + 1));
    c.trace = std::move(events);
    by_category[c.diagnoses.front().code.substr(0, 3)].push_back(std::move(c));
  }

  for (auto& [category, cases] : by_category) {
    CategorySummary cs{category, cases.size(), cases.size() >= options.min_cases};
    summary.categories.push_back(cs);
    if (!cs.kept) continue;
    EventLog log;
    log.id = category;
    log.diagnosis_taxonomy = options.diagnosis_taxonomy;
    log.procedure_taxonomy = options.procedure_taxonomy;
    log.cases = std::move(cases);
    result.logs.emplace(category, std::move(log));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Prefixes and statistics

std::vector<PrefixInstance> prefixes(const Case& c) {
  if (c.trace.size() < 2) {
    throw InvalidArgument("trace of case '" + c.case_id + "' is too short for prefix expansion");
  }
  std::vector<PrefixInstance> out;
  out.reserve(c.trace.size() - 1);
  for (std::size_t k = 1; k < c.trace.size(); ++k) {
    out.push_back({std::vector<Event>(c.trace.begin(), c.trace.begin() + static_cast<std::ptrdiff_t>(k)),
                   c.trace[k]});
  }
  return out;
}

LogStats stats(const EventLog& log) {
  if (log.cases.empty()) throw DataError("log '" + log.id + "' is empty");
  LogStats s;
  s.n_traces = log.cases.size();
  std::set<std::vector<std::string>> variants;
  std::set<std::string> events;
  std::set<std::string> diags;
  double sum = 0.0;
  std::vector<double> lengths;
  lengths.reserve(log.cases.size());
  for (const auto& c : log.cases) {
    std::vector<std::string> flow;
    for (const auto& e : c.trace) {
      if (e.is_end()) continue;
      flow.push_back(e.code);
      events.insert(e.code);
    }
    for (const auto& d : c.diagnoses) diags.insert(d.code);
    lengths.push_back(static_cast<double>(flow.size()));
    sum += lengths.back();
    variants.insert(std::move(flow));
  }
  s.n_trace_variants = variants.size();
  s.n_unique_events = events.size();
  s.n_unique_diagnoses = diags.size();
  s.mean_trace_length = sum / static_cast<double>(lengths.size());
  double sq = 0.0;
  for (double l : lengths) sq += (l - s.mean_trace_length) * (l - s.mean_trace_length);
  s.std_trace_length = std::sqrt(sq / static_cast<double>(lengths.size()));
  return s;
}

// ---------------------------------------------------------------------------
// CSV

std::vector<ProcedureRecord> read_procedures_csv(std::string_view text) {
  return read_csv<ProcedureRecord>(text, kProcedureHeader, &to_procedure);
}

std::vector<DiagnosisRecord> read_diagnoses_csv(std::string_view text) {
  return read_csv<DiagnosisRecord>(text, kDiagnosisHeader, &to_diagnosis);
}

std::string write_procedures_csv(std::span<const EventLog> logs) {
  std::ostringstream out;
  out << "case_id,code,timestamp,seq_num\n";
  for (const auto& log : logs) {
    for (const auto& c : log.cases) {
      for (const auto& e : c.trace) {
        if (e.is_end()) continue;
        out << csv_field(c.case_id) << ',' << csv_field(e.code) << ',' << format_timestamp(e.timestamp)
            << ',' << e.seq_num << '\n';
      }
    }
  }
  return out.str();
}

std::string write_diagnoses_csv(std::span<const EventLog> logs) {
  std::ostringstream out;
  out << "case_id,code,seq_num\n";
  for (const auto& log : logs) {
    for (const auto& c : log.cases) {
      for (const auto& d : c.diagnoses) {
        out << csv_field(c.case_id) << ',' << csv_field(d.code) << ',' << d.seq << '\n';
      }
    }
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// JSON

std::string to_json(const EventLog& log) {
  json doc;
  doc["id"] = log.id;
  doc["diagnosis_taxonomy"] = log.diagnosis_taxonomy;
  doc["procedure_taxonomy"] = log.procedure_taxonomy;
  json cases = json::array();
  for (const auto& c : log.cases) {
    json jc;
    jc["case_id"] = c.case_id;
    jc["admit_time"] = format_timestamp(c.admit_time);
    json diags = json::array();
    for (const auto& d : c.diagnoses) diags.push_back({{"code", d.code}, {"seq", d.seq}});
    jc["diagnoses"] = std::move(diags);
    json events = json::array();
    for (const auto& e : c.trace) {
      events.push_back({{"code", e.code}, {"ts", format_timestamp(e.timestamp)}, {"seq", e.seq_num}});
    }
    jc["events"] = std::move(events);
    cases.push_back(std::move(jc));
  }
  doc["cases"] = std::move(cases);
  return doc.dump(1) + "\n";
}

EventLog event_log_from_json(std::string_view text) {
  EventLog log;
  try {
    const json doc = json::parse(text);
    log.id = doc.at("id").get<std::string>();
    log.diagnosis_taxonomy = doc.at("diagnosis_taxonomy").get<std::string>();
    log.procedure_taxonomy = doc.at("procedure_taxonomy").get<std::string>();
    for (const auto& jc : doc.at("cases")) {
      Case c;
      c.case_id = jc.at("case_id").get<std::string>();
      c.admit_time = parse_timestamp(jc.at("admit_time").get<std::string>());
      for (const auto& jd : jc.at("diagnoses")) {
        c.diagnoses.push_back({jd.at("code").get<std::string>(), jd.at("seq").get<int>()});
      }
      std::size_t index = 0;
      for (const auto& je : jc.at("events")) {
        Event e;
        e.code = je.at("code").get<std::string>();
        e.timestamp = parse_timestamp(je.at("ts").get<std::string>());
        e.seq_num = je.at("seq").get<int>();
        if (e.is_end()) {
          e.event_id = c.case_id + ":END";
          e.taxonomy_id = std::string(kEndActivity);
        } else {
          e.event_id = c.case_id + ":" + std::to_string(++index);
          e.taxonomy_id = log.procedure_taxonomy;
        }
        c.trace.push_back(std::move(e));
      }
      log.cases.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed event log JSON: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("malformed event log JSON: ") + e.what());
  }
  validate(log);
  return log;
}

EventLog load_event_log(const std::filesystem::path& path) {
  return event_log_from_json(read_text_file(path));
}

}  // namespace taxonap
