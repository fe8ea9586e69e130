#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "taxonap/eventlog.hpp"
#include "taxonap/similarity.hpp"

namespace taxonap {

enum class RankingMode {
  kScoreSum,    // group proposals by next event, score = sum of sim_trace
  kDedupFirst,  // keep the best-ranked case per next event
};

std::string_view to_string(RankingMode mode);
RankingMode parse_ranking_mode(std::string_view text);

struct PredictorOptions {
  std::size_t n = 5;
  RankingMode mode = RankingMode::kScoreSum;
  // score_sum only: aggregate over the `retain` best-ranked cases; 0 uses the
  // whole pool.
  std::size_t retain = 0;
  std::optional<std::string> exclude_case;
  // Full breakdowns attached to each candidate for its best supporters.
  std::size_t explain_top_k = 0;
  std::size_t threads = 0;
};

// A pool case scored against the query.
struct ScoredCase {
  const Case* source = nullptr;
  std::string next_activity;
  double sim_list = 0.0;
  double sim_cf = 0.0;
  double sim_trace = 0.0;
};

// Strict total order used for ranking: higher sim_trace, then higher
// sim_list, then higher sim_cf, then more recent admission, then smaller
// case id. Similarities compare on a 1e-12 grid.
bool ranks_before(const ScoredCase& a, const ScoredCase& b);

// Cases whose trace (END included) has at least query_len + 1 events.
std::vector<const Case*> candidate_pool(const EventLog& log, std::size_t query_len,
                                        std::optional<std::string_view> exclude_case = std::nullopt);

struct Supporter {
  std::string case_id;
  double sim_trace = 0.0;
  double sim_list = 0.0;
  double sim_cf = 0.0;
};

struct PredictionCandidate {
  std::string activity;
  double score = 0.0;
  std::vector<Supporter> supporters;  // ranking order
  std::vector<SimilarityBreakdown> explanations;
};

struct PredictionResult {
  std::string query_fingerprint;
  RankingMode mode = RankingMode::kScoreSum;
  std::size_t pool_size = 0;
  std::vector<PredictionCandidate> candidates;

  std::vector<std::string> activities() const;
};

std::string fingerprint(const TraceQuery& query);

// Scores every pool case, ranks them, and turns the next events of the
// ranked cases into at most n distinct candidates. An empty pool yields an
// empty candidate list.
PredictionResult predict(const TraceQuery& query, const EventLog& log, const TraceSimilarity& similarity,
                         const PredictorOptions& options = {});

}  // namespace taxonap
