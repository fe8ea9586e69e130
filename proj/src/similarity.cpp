#include "taxonap/similarity.hpp"

#include <cmath>

#include "taxonap/errors.hpp"

namespace taxonap {

namespace {

std::vector<GraphNode> diagnosis_nodes(std::span<const Diagnosis> list) {
  std::vector<GraphNode> nodes;
  nodes.reserve(list.size());
  for (const auto& d : list) nodes.push_back({d.code, d.seq});
  return nodes;
}

ComponentSimilarity match_component(std::span<const GraphNode> query, std::span<const GraphNode> candidate,
                                    const CodeSimilarity& sim) {
  const auto graph = build_graph(query, candidate,
                                 [&sim](std::string_view a, std::string_view b) { return sim(a, b); });
  const Matching m = max_weight_matching(graph);
  ComponentSimilarity out;
  out.matched_weight = m.total_weight;
  out.value = m.total_weight / static_cast<double>(query.size());
  out.edges.reserve(m.pairs.size());
  for (const auto& [i, j] : m.pairs) {
    const std::size_t k = i * graph.cols() + j;
    out.edges.push_back({i, j, graph.left[i].code, graph.right[j].code, graph.left[i].pos,
                         graph.right[j].pos, graph.similarity[k], graph.order_weight[k],
                         graph.weights[k]});
  }
  return out;
}

}  // namespace

SimilarityConfig& SimilarityConfig::with_static_alpha(double list, double control_flow) {
  if (!(list >= 0.0 && list <= 1.0 && control_flow >= 0.0 && control_flow <= 1.0) ||
      std::abs(list + control_flow - 1.0) > 1e-12) {
    throw InvalidArgument("static alpha weights must lie in [0, 1] and sum to 1");
  }
  alpha_mode = AlphaMode::kStatic;
  static_alpha = {list, control_flow};
  return *this;
}

AlphaWeights alpha_schedule(const SimilarityConfig& cfg, std::size_t trace_len) {
  if (cfg.alpha_mode == AlphaMode::kStatic) return cfg.static_alpha;
  const double len = static_cast<double>(trace_len);
  return {1.0 / (len + 1.0), len / (len + 1.0)};
}

TraceQuery TraceQuery::from_case_prefix(const Case& c, std::size_t prefix_len) {
  if (prefix_len > c.trace.size()) {
    throw InvalidArgument("prefix longer than the trace of case '" + c.case_id + "'");
  }
  TraceQuery q;
  q.diagnoses = c.diagnoses;
  for (std::size_t i = 0; i < prefix_len; ++i) {
    if (c.trace[i].is_end()) throw InvalidArgument("END cannot appear inside a query prefix");
    q.events.push_back(c.trace[i].code);
  }
  return q;
}

TraceSimilarity::TraceSimilarity(const Taxonomy& diagnoses, const Taxonomy& procedures,
                                 SimilarityConfig cfg)
    : cfg_(cfg), diag_(diagnoses, cfg.diagnosis_kind), proc_(procedures, cfg.procedure_kind) {}

ComponentSimilarity TraceSimilarity::control_flow(std::span<const std::string> query,
                                                  std::span<const std::string> candidate) const {
  if (query.empty() || candidate.empty()) throw InvalidArgument("sim_cf needs non-empty traces");
  const auto left = positional_nodes(query);
  const auto right = positional_nodes(candidate);
  return match_component(left, right, proc_);
}

ComponentSimilarity TraceSimilarity::list(std::span<const Diagnosis> query,
                                          std::span<const Diagnosis> candidate) const {
  if (query.empty() || candidate.empty()) throw InvalidArgument("sim_list needs non-empty lists");
  const auto left = diagnosis_nodes(query);
  const auto right = diagnosis_nodes(candidate);
  return match_component(left, right, diag_);
}

SimilarityBreakdown TraceSimilarity::compare(const TraceQuery& query, const Case& candidate) const {
  SimilarityBreakdown b;
  b.case_id = candidate.case_id;
  auto list_part = list(query.diagnoses, candidate.diagnoses);
  b.sim_list = list_part.value;
  b.list_matching = std::move(list_part.edges);
  if (!query.events.empty()) {
    const auto activities = candidate.activities();
    auto cf_part = control_flow(query.events, activities);
    b.sim_cf = cf_part.value;
    b.cf_matching = std::move(cf_part.edges);
  }
  b.alpha = alpha_schedule(cfg_, query.events.size());
  b.sim_trace = sim_trace(b.sim_list, b.sim_cf, b.alpha);
  return b;
}

double sim_cf(std::span<const std::string> query, std::span<const std::string> candidate,
              const CodeSimilarity& sim) {
  if (query.empty() || candidate.empty()) throw InvalidArgument("sim_cf needs non-empty traces");
  const auto left = positional_nodes(query);
  const auto right = positional_nodes(candidate);
  return match_component(left, right, sim).value;
}

double sim_list(std::span<const Diagnosis> query, std::span<const Diagnosis> candidate,
                const CodeSimilarity& sim) {
  if (query.empty() || candidate.empty()) throw InvalidArgument("sim_list needs non-empty lists");
  const auto left = diagnosis_nodes(query);
  const auto right = diagnosis_nodes(candidate);
  return match_component(left, right, sim).value;
}

}  // namespace taxonap
