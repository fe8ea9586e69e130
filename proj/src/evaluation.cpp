#include "taxonap/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>
#include <nlohmann/json.hpp>

#include "taxonap/errors.hpp"
#include "taxonap/parallel.hpp"
#include "text_util.hpp"

namespace taxonap {

using detail::format_real;
using json = nlohmann::ordered_json;

std::string_view to_string(Variant v) { return v == Variant::kT ? "T" : "B"; }

Variant parse_variant(std::string_view text) {
  if (text == "T" || text == "t") return Variant::kT;
  if (text == "B" || text == "b") return Variant::kB;
  throw InvalidArgument("unknown variant '" + std::string(text) + "' (expected T or B)");
}

double max_similarity(const Taxonomy& procedures, std::string_view true_next,
                      std::span<const std::string> predicted) {
  const CodeSimilarity sim(procedures, SimilarityKind::kSanchez);
  double best = 0.0;
  for (const auto& p : predicted) best = std::max(best, sim(true_next, p));
  return best;
}

LooResult loo_evaluate(const EventLog& log, const Taxonomy& diagnoses, const Taxonomy& procedures,
                       const EvalOptions& options) {
  if (log.cases.size() < 2) {
    throw DataError("log '" + log.id + "' needs at least two cases for leave-one-out");
  }
  const TraceSimilarity sim_t(diagnoses, procedures, options.config_t);
  const TraceSimilarity sim_b(diagnoses, procedures, options.config_b);
  const CodeSimilarity metric(procedures, SimilarityKind::kSanchez);

  std::vector<std::vector<EvalRecord>> folds_t(log.cases.size());
  std::vector<std::vector<EvalRecord>> folds_b(log.cases.size());
  parallel_for(log.cases.size(), options.threads, [&](std::size_t ci) {
    const Case& held = log.cases[ci];
    PredictorOptions popt;
    popt.n = options.n;
    popt.mode = options.mode;
    popt.retain = options.retain;
    popt.exclude_case = held.case_id;
    popt.threads = 1;
    for (std::size_t k = 1; k < held.trace.size(); ++k) {
      const auto query = TraceQuery::from_case_prefix(held, k);
      const std::string& truth = held.trace[k].code;
      auto run = [&](const TraceSimilarity& sim, Variant v, std::vector<EvalRecord>& out) {
        EvalRecord r;
        r.log_id = log.id;
        r.case_id = held.case_id;
        r.prefix_len = k;
        r.true_next = truth;
        r.predicted = predict(query, log, sim, popt).activities();
        for (const auto& p : r.predicted) r.max_sim = std::max(r.max_sim, metric(truth, p));
        r.variant = v;
        out.push_back(std::move(r));
      };
      if (options.run_t) run(sim_t, Variant::kT, folds_t[ci]);
      if (options.run_b) run(sim_b, Variant::kB, folds_b[ci]);
    }
  });

  LooResult out;
  for (auto& f : folds_t) std::move(f.begin(), f.end(), std::back_inserter(out.records_t));
  for (auto& f : folds_b) std::move(f.begin(), f.end(), std::back_inserter(out.records_b));
  return out;
}

double average_similarity(std::span<const EvalRecord> records, bool per_trace) {
  if (records.empty()) throw InvalidArgument("average_similarity needs at least one record");
  if (!per_trace) {
    double sum = 0.0;
    for (const auto& r : records) sum += r.max_sim;
    return sum / static_cast<double>(records.size());
  }
  std::map<std::string, std::pair<double, std::size_t>> by_case;
  for (const auto& r : records) {
    auto& [sum, count] = by_case[r.case_id];
    sum += r.max_sim;
    ++count;
  }
  double total = 0.0;
  for (const auto& [id, acc] : by_case) total += acc.first / static_cast<double>(acc.second);
  return total / static_cast<double>(by_case.size());
}

namespace {

void check_samples(std::span<const double> t, std::span<const double> b, bool paired) {
  if (paired && t.size() != b.size()) {
    throw InvalidArgument("paired t-test needs equal lengths (" + std::to_string(t.size()) + " vs " +
                          std::to_string(b.size()) + ")");
  }
  if (t.size() < 2 || b.size() < 2) throw InvalidArgument("t-test needs at least two samples per side");
}

double mean(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

// Unbiased sample variance.
double variance(std::span<const double> xs, double m) {
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

double upper_tail(double t, double df) {
  const boost::math::students_t dist(df);
  return boost::math::cdf(boost::math::complement(dist, t));
}

}  // namespace

double one_sided_paired_t_test(std::span<const double> t, std::span<const double> b) {
  check_samples(t, b, true);
  std::vector<double> d(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) d[i] = t[i] - b[i];
  const double m = mean(d);
  const double var = variance(d, m);
  if (var <= 0.0) return m > 0.0 ? 0.0 : 1.0;
  const double n = static_cast<double>(d.size());
  return upper_tail(m / std::sqrt(var / n), n - 1.0);
}

double one_sided_welch_t_test(std::span<const double> t, std::span<const double> b) {
  check_samples(t, b, false);
  const double mt = mean(t), mb = mean(b);
  const double nt = static_cast<double>(t.size()), nb = static_cast<double>(b.size());
  const double qt = variance(t, mt) / nt, qb = variance(b, mb) / nb;
  if (qt + qb <= 0.0) return mt > mb ? 0.0 : 1.0;
  const double df = (qt + qb) * (qt + qb) / (qt * qt / (nt - 1.0) + qb * qb / (nb - 1.0));
  return upper_tail((mt - mb) / std::sqrt(qt + qb), df);
}

namespace {

void check_paired(std::span<const EvalRecord> t, std::span<const EvalRecord> b) {
  if (b.empty()) return;
  if (t.size() != b.size()) throw InvalidArgument("T and B records are not paired");
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i].case_id != b[i].case_id || t[i].prefix_len != b[i].prefix_len) {
      throw InvalidArgument("T and B records are not paired at index " + std::to_string(i));
    }
  }
}

std::optional<double> compare_variants(std::span<const double> t, std::span<const double> b,
                                       TestKind test) {
  if (b.empty() || t.size() < 2) return std::nullopt;
  return test == TestKind::kPaired ? one_sided_paired_t_test(t, b) : one_sided_welch_t_test(t, b);
}

}  // namespace

std::vector<PrefixRow> per_prefix_analysis(std::span<const EvalRecord> records_t,
                                           std::span<const EvalRecord> records_b, TestKind test) {
  check_paired(records_t, records_b);
  std::map<std::size_t, std::pair<std::vector<double>, std::vector<double>>> groups;
  for (std::size_t i = 0; i < records_t.size(); ++i) {
    auto& g = groups[records_t[i].prefix_len];
    g.first.push_back(records_t[i].max_sim);
    if (!records_b.empty()) g.second.push_back(records_b[i].max_sim);
  }
  std::vector<PrefixRow> rows;
  for (const auto& [len, g] : groups) {
    PrefixRow row;
    row.prefix_len = len;
    row.count = g.first.size();
    row.avg_sim_t = mean(g.first);
    if (!g.second.empty()) row.avg_sim_b = mean(g.second);
    row.p_value = compare_variants(g.first, g.second, test);
    rows.push_back(row);
  }
  return rows;
}

EvalReport make_report(const EventLog& log, const LooResult& loo, std::size_t n, bool per_trace,
                       TestKind test) {
  check_paired(loo.records_t, loo.records_b);
  EvalReport report;
  report.n = n;
  report.per_trace = per_trace;
  report.log.log_id = log.id;
  report.log.stats = stats(log);
  report.log.avg_sim_t = average_similarity(loo.records_t, per_trace);
  if (!loo.records_b.empty()) {
    report.log.avg_sim_b = average_similarity(loo.records_b, per_trace);
    std::vector<double> t, b;
    for (const auto& r : loo.records_t) t.push_back(r.max_sim);
    for (const auto& r : loo.records_b) b.push_back(r.max_sim);
    report.log.p_value = compare_variants(t, b, test);
  }
  report.prefixes = per_prefix_analysis(loo.records_t, loo.records_b, test);
  return report;
}

namespace {

std::string opt_real(const std::optional<double>& v) { return v ? format_real(*v) : ""; }

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::string log_table_csv(const EvalReport& report) {
  const bool both = report.log.avg_sim_b.has_value();
  std::ostringstream out;
  out << "log_id,n_traces,mean_length,std_length,";
  if (both) out << "avg_sim_B,";
  out << "avg_sim_T,n_variants,n_unique_events,n_unique_diagnoses";
  if (both) out << ",p_value";
  out << '\n';
  const auto& r = report.log;
  out << r.log_id << ',' << r.stats.n_traces << ',' << format_real(r.stats.mean_trace_length) << ','
      << format_real(r.stats.std_trace_length) << ',';
  if (both) out << format_real(*r.avg_sim_b) << ',';
  out << format_real(r.avg_sim_t) << ',' << r.stats.n_trace_variants << ',' << r.stats.n_unique_events
      << ',' << r.stats.n_unique_diagnoses;
  if (both) out << ',' << opt_real(r.p_value);
  out << '\n';
  return out.str();
}

std::string prefix_table_csv(const EvalReport& report) {
  const bool both = report.log.avg_sim_b.has_value();
  std::ostringstream out;
  out << (both ? "prefix_len,count,avg_sim_B,avg_sim_T,p_value\n" : "prefix_len,count,avg_sim_T\n");
  for (const auto& row : report.prefixes) {
    out << row.prefix_len << ',' << row.count << ',';
    if (both) out << opt_real(row.avg_sim_b) << ',';
    out << format_real(row.avg_sim_t);
    if (both) out << ',' << opt_real(row.p_value);
    out << '\n';
  }
  return out.str();
}

std::string report_json(const EvalReport& report) {
  const bool both = report.log.avg_sim_b.has_value();
  const auto& r = report.log;
  json log_row;
  log_row["log_id"] = r.log_id;
  log_row["n_traces"] = r.stats.n_traces;
  log_row["mean_length"] = r.stats.mean_trace_length;
  log_row["std_length"] = r.stats.std_trace_length;
  if (both) log_row["avg_sim_B"] = *r.avg_sim_b;
  log_row["avg_sim_T"] = r.avg_sim_t;
  log_row["n_variants"] = r.stats.n_trace_variants;
  log_row["n_unique_events"] = r.stats.n_unique_events;
  log_row["n_unique_diagnoses"] = r.stats.n_unique_diagnoses;
  if (both) log_row["p_value"] = opt_json(r.p_value);

  json prefixes = json::array();
  for (const auto& row : report.prefixes) {
    json j;
    j["prefix_len"] = row.prefix_len;
    j["count"] = row.count;
    if (both) j["avg_sim_B"] = opt_json(row.avg_sim_b);
    j["avg_sim_T"] = row.avg_sim_t;
    if (both) j["p_value"] = opt_json(row.p_value);
    prefixes.push_back(std::move(j));
  }

  json doc;
  doc["n"] = report.n;
  doc["average"] = report.per_trace ? "per_trace" : "per_instance";
  doc["logs"] = json::array({log_row});
  doc["per_prefix"] = std::move(prefixes);
  return doc.dump(2) + "\n";
}

std::string records_csv(std::span<const EvalRecord> records) {
  std::ostringstream out;
  out << "log_id,case_id,prefix_len,variant,true_next,predicted,max_sim\n";
  for (const auto& r : records) {
    out << r.log_id << ',' << r.case_id << ',' << r.prefix_len << ',' << to_string(r.variant) << ','
        << r.true_next << ',';
    for (std::size_t i = 0; i < r.predicted.size(); ++i) out << (i ? ";" : "") << r.predicted[i];
    out << ',' << format_real(r.max_sim) << '\n';
  }
  return out.str();
}

}  // namespace taxonap
