#pragma once

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "taxonap/eventlog.hpp"
#include "taxonap/matching.hpp"
#include "taxonap/taxonomy.hpp"

namespace taxonap {

enum class AlphaMode { kDynamic, kStatic };

struct AlphaWeights {
  double list = 0.5;          // alpha_1, weight of sim_list
  double control_flow = 0.5;  // alpha_2, weight of sim_cf
};

struct SimilarityConfig {
  SimilarityKind diagnosis_kind = SimilarityKind::kSanchez;
  SimilarityKind procedure_kind = SimilarityKind::kSanchez;
  AlphaMode alpha_mode = AlphaMode::kDynamic;
  AlphaWeights static_alpha{};

  // Taxonomic variant: Sanchez similarity on both taxonomies.
  static SimilarityConfig taxonomic() { return {}; }
  // Baseline variant: exact code equality on both taxonomies.
  static SimilarityConfig boolean() {
    SimilarityConfig cfg;
    cfg.diagnosis_kind = SimilarityKind::kBoolean;
    cfg.procedure_kind = SimilarityKind::kBoolean;
    return cfg;
  }
  // Fixed weights; throws InvalidArgument unless both lie in [0, 1] and sum
  // to 1.
  SimilarityConfig& with_static_alpha(double list, double control_flow);
};

// Dynamic: (1/(L+1), L/(L+1)) for L procedure events in the query.
// Static: the configured constants.
AlphaWeights alpha_schedule(const SimilarityConfig& cfg, std::size_t trace_len);

// The query side of a comparison: a diagnosis list plus an observed prefix
// of procedure codes (no END).
struct TraceQuery {
  std::vector<Diagnosis> diagnoses;
  std::vector<std::string> events;

  static TraceQuery from_case_prefix(const Case& c, std::size_t prefix_len);
};

// One matched edge with both weight factors.
struct MatchedEdge {
  std::size_t left = 0;
  std::size_t right = 0;
  std::string left_code;
  std::string right_code;
  int left_pos = 1;
  int right_pos = 1;
  double similarity = 0.0;
  double order_weight = 0.0;
  double weight = 0.0;
};

struct ComponentSimilarity {
  double value = 0.0;
  double matched_weight = 0.0;
  std::vector<MatchedEdge> edges;
};

struct SimilarityBreakdown {
  std::string case_id;
  double sim_list = 0.0;
  double sim_cf = 0.0;
  AlphaWeights alpha;
  double sim_trace = 0.0;
  std::vector<MatchedEdge> list_matching;
  std::vector<MatchedEdge> cf_matching;
};

// Bundles the two taxonomies with a configuration.
class TraceSimilarity {
 public:
  TraceSimilarity(const Taxonomy& diagnoses, const Taxonomy& procedures, SimilarityConfig cfg);

  const SimilarityConfig& config() const { return cfg_; }
  const CodeSimilarity& diagnosis_similarity() const { return diag_; }
  const CodeSimilarity& procedure_similarity() const { return proc_; }

  // (1/|query|) * mwm over 1-based trace positions. Throws InvalidArgument
  // when either side is empty.
  ComponentSimilarity control_flow(std::span<const std::string> query,
                                   std::span<const std::string> candidate) const;
  // (1/|query|) * mwm over diagnosis seq numbers.
  ComponentSimilarity list(std::span<const Diagnosis> query, std::span<const Diagnosis> candidate) const;

  // Full breakdown of alpha_1 * sim_list + alpha_2 * sim_cf. A query without
  // events scores sim_cf = 0; under the dynamic schedule it then carries no
  // weight.
  SimilarityBreakdown compare(const TraceQuery& query, const Case& candidate) const;

 private:
  SimilarityConfig cfg_;
  CodeSimilarity diag_;
  CodeSimilarity proc_;
};

// Convenience wrappers over TraceSimilarity.
double sim_cf(std::span<const std::string> query, std::span<const std::string> candidate,
              const CodeSimilarity& sim);
double sim_list(std::span<const Diagnosis> query, std::span<const Diagnosis> candidate,
                const CodeSimilarity& sim);
inline double sim_trace(double list, double control_flow, AlphaWeights alpha) {
  return alpha.list * list + alpha.control_flow * control_flow;
}

}  // namespace taxonap
