#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace taxonap {

// One side of a comparison graph: a code and its 1-based temporal or
// priority position.
struct GraphNode {
  std::string code;
  int pos = 1;
};

// Complete bipartite graph with weights in [0, 1], stored row major.
// `similarity` and `order_weight` keep the two factors of every weight for
// explanations.
struct WeightedBipartiteGraph {
  std::vector<GraphNode> left;
  std::vector<GraphNode> right;
  std::vector<double> similarity;
  std::vector<double> order_weight;
  std::vector<double> weights;

  std::size_t rows() const { return left.size(); }
  std::size_t cols() const { return right.size(); }
  double weight(std::size_t i, std::size_t j) const { return weights[i * right.size() + j]; }
};

struct Matching {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (left, right), ascending left
  double total_weight = 0.0;
};

// 0.5^|pos_u - pos_v|
double order_weight(int pos_u, int pos_v);

using CodeSimilarityFn = std::function<double(std::string_view, std::string_view)>;

// weight[i][j] = sim(a_i, b_j) * order_weight(pos(a_i), pos(b_j)).
// Throws InvalidArgument if a side is empty, positions are not strictly
// increasing, or a similarity falls outside [0, 1].
WeightedBipartiteGraph build_graph(std::span<const GraphNode> a, std::span<const GraphNode> b,
                                   const CodeSimilarityFn& sim);

// Exact maximum-weight matching of a rows x cols non-negative weight matrix.
// Among optimal matchings the one whose left-to-right assignment is
// lexicographically smallest is returned; zero-weight pairs are dropped.
Matching max_weight_matching(std::span<const double> weights, std::size_t rows, std::size_t cols);
Matching max_weight_matching(const WeightedBipartiteGraph& g);

// Helper for sequences: positions 1..n.
std::vector<GraphNode> positional_nodes(std::span<const std::string> codes);

}  // namespace taxonap
