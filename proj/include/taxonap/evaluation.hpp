#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "taxonap/eventlog.hpp"
#include "taxonap/predictor.hpp"
#include "taxonap/similarity.hpp"
#include "taxonap/taxonomy.hpp"

namespace taxonap {

enum class Variant { kT, kB };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view text);

struct EvalRecord {
  std::string log_id;
  std::string case_id;
  std::size_t prefix_len = 0;
  std::string true_next;
  std::vector<std::string> predicted;
  double max_sim = 0.0;
  Variant variant = Variant::kT;
};

// max over predicted of sim_sanchez(true_next, p), END-aware; 0 for an
// empty prediction list.
double max_similarity(const Taxonomy& procedures, std::string_view true_next,
                      std::span<const std::string> predicted);

struct EvalOptions {
  std::size_t n = 5;
  RankingMode mode = RankingMode::kScoreSum;
  std::size_t retain = 0;
  SimilarityConfig config_t = SimilarityConfig::taxonomic();
  SimilarityConfig config_b = SimilarityConfig::boolean();
  bool run_t = true;
  bool run_b = true;
  std::size_t threads = 0;
};

struct LooResult {
  std::vector<EvalRecord> records_t;  // ordered by (case order, prefix_len)
  std::vector<EvalRecord> records_b;
};

// Leave-one-out over cases with prefix expansion. Throws DataError when the
// log has fewer than two cases.
LooResult loo_evaluate(const EventLog& log, const Taxonomy& diagnoses, const Taxonomy& procedures,
                       const EvalOptions& options = {});

// Mean of max_sim over instances, or over per-case means when per_trace is
// set. Throws InvalidArgument on empty input.
double average_similarity(std::span<const EvalRecord> records, bool per_trace = false);

// H1: mean(t - b) > 0. Zero-variance differences give 0 when the mean
// difference is positive and 1 otherwise. Throws InvalidArgument on length
// mismatch or fewer than two pairs.
double one_sided_paired_t_test(std::span<const double> t, std::span<const double> b);
// Unpaired Welch variant with the same alternative.
double one_sided_welch_t_test(std::span<const double> t, std::span<const double> b);

enum class TestKind { kPaired, kWelch };

struct PrefixRow {
  std::size_t prefix_len = 0;
  std::size_t count = 0;
  std::optional<double> avg_sim_b;
  double avg_sim_t = 0.0;
  std::optional<double> p_value;  // absent with one variant or fewer than two pairs
};

// Rows grouped by prefix_len, ascending. records_b may be empty. Throws
// InvalidArgument when non-empty inputs are not paired.
std::vector<PrefixRow> per_prefix_analysis(std::span<const EvalRecord> records_t,
                                           std::span<const EvalRecord> records_b,
                                           TestKind test = TestKind::kPaired);

struct LogRow {
  std::string log_id;
  LogStats stats;
  std::optional<double> avg_sim_b;
  double avg_sim_t = 0.0;
  std::optional<double> p_value;
};

struct EvalReport {
  std::size_t n = 5;
  bool per_trace = false;
  LogRow log;
  std::vector<PrefixRow> prefixes;
};

EvalReport make_report(const EventLog& log, const LooResult& loo, std::size_t n, bool per_trace = false,
                       TestKind test = TestKind::kPaired);

// log_id,n_traces,mean_length,std_length,avg_sim_B,avg_sim_T,n_variants,
// n_unique_events,n_unique_diagnoses,p_value (B columns and p_value are
// dropped for a single-variant report).
std::string log_table_csv(const EvalReport& report);
// prefix_len,count,avg_sim_B,avg_sim_T,p_value
std::string prefix_table_csv(const EvalReport& report);
std::string report_json(const EvalReport& report);
std::string records_csv(std::span<const EvalRecord> records);

}  // namespace taxonap
