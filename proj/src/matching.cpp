#include "taxonap/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "taxonap/errors.hpp"

namespace taxonap {

namespace {

// Reduced costs at or below this are treated as tight when choosing among
// optimal assignments.
constexpr double kTightTolerance = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct SquareAssignment {
  std::vector<std::size_t> row_to_col;
  std::vector<double> u;  // row potentials
  std::vector<double> v;  // column potentials
};

// Minimum-cost perfect assignment on an n x n matrix (shortest augmenting
// paths with potentials). Maintains u[i] + v[j] <= cost(i, j).
SquareAssignment solve_min_cost(const std::vector<double>& cost, std::size_t n) {
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  auto a = [&](std::size_t i, std::size_t j) { return cost[(i - 1) * n + (j - 1)]; };
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  SquareAssignment out;
  out.row_to_col.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) out.row_to_col[p[j] - 1] = j - 1;
  out.u.assign(u.begin() + 1, u.end());
  out.v.assign(v.begin() + 1, v.end());
  return out;
}

// Re-routes an optimal assignment to the lexicographically smallest one
// among the perfect matchings of the tight subgraph. Every such matching is
// optimal for the final potentials, so the total weight is unchanged.
void lexicographic_refine(const std::vector<double>& cost, std::size_t n, SquareAssignment& sol) {
  auto tight = [&](std::size_t i, std::size_t j) {
    return cost[i * n + j] - sol.u[i] - sol.v[j] <= kTightTolerance;
  };
  auto& row_to_col = sol.row_to_col;
  std::vector<std::size_t> col_to_row(n);
  for (std::size_t i = 0; i < n; ++i) col_to_row[row_to_col[i]] = i;

  std::vector<std::size_t> pred_row(n);
  std::vector<bool> visited(n);
  std::vector<std::size_t> queue;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n && row_to_col[i] != j; ++j) {
      const std::size_t start = col_to_row[j];
      if (start < i || !tight(i, j)) continue;
      // Row i takes j and releases `target`; search an alternating path from
      // the row holding j to `target` through rows that are not fixed yet.
      const std::size_t target = row_to_col[i];
      std::fill(visited.begin(), visited.end(), false);
      queue.assign(1, start);
      visited[start] = true;
      std::size_t end_row = n;
      for (std::size_t q = 0; q < queue.size() && end_row == n; ++q) {
        const std::size_t r = queue[q];
        for (std::size_t c = 0; c < n; ++c) {
          if (c == j || !tight(r, c)) continue;
          if (c == target) {
            end_row = r;
            break;
          }
          const std::size_t next = col_to_row[c];
          if (next <= i || visited[next]) continue;
          visited[next] = true;
          pred_row[next] = r;
          queue.push_back(next);
        }
      }
      if (end_row == n) continue;
      std::size_t r = end_row;
      std::size_t take = target;
      while (true) {
        const std::size_t released = row_to_col[r];
        row_to_col[r] = take;
        col_to_row[take] = r;
        if (r == start) break;
        take = released;
        r = pred_row[r];
      }
      row_to_col[i] = j;
      col_to_row[j] = i;
      break;
    }
  }
}

}  // namespace

double order_weight(int pos_u, int pos_v) {
  return std::ldexp(1.0, -std::abs(pos_u - pos_v));
}

std::vector<GraphNode> positional_nodes(std::span<const std::string> codes) {
  std::vector<GraphNode> nodes;
  nodes.reserve(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) nodes.push_back({codes[i], static_cast<int>(i + 1)});
  return nodes;
}

WeightedBipartiteGraph build_graph(std::span<const GraphNode> a, std::span<const GraphNode> b,
                                   const CodeSimilarityFn& sim) {
  if (a.empty() || b.empty()) throw InvalidArgument("cannot build a graph over an empty sequence");
  auto check_positions = [](std::span<const GraphNode> side) {
    for (std::size_t i = 0; i < side.size(); ++i) {
      if (side[i].pos < 1) throw InvalidArgument("graph positions must be >= 1");
      if (i > 0 && side[i].pos <= side[i - 1].pos) {
        throw InvalidArgument("graph positions must be strictly increasing");
      }
    }
  };
  check_positions(a);
  check_positions(b);
  WeightedBipartiteGraph g;
  g.left.assign(a.begin(), a.end());
  g.right.assign(b.begin(), b.end());
  const std::size_t cells = a.size() * b.size();
  g.similarity.resize(cells);
  g.order_weight.resize(cells);
  g.weights.resize(cells);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double s = sim(a[i].code, b[j].code);
      if (!(s >= 0.0 && s <= 1.0)) throw InvalidArgument("similarity outside [0, 1]");
      const double w = order_weight(a[i].pos, b[j].pos);
      const std::size_t k = i * b.size() + j;
      g.similarity[k] = s;
      g.order_weight[k] = w;
      g.weights[k] = s * w;
    }
  }
  return g;
}

Matching max_weight_matching(std::span<const double> weights, std::size_t rows, std::size_t cols) {
  if (weights.size() != rows * cols) throw InvalidArgument("weight matrix has the wrong size");
  Matching result;
  if (rows == 0 || cols == 0) return result;
  const std::size_t n = std::max(rows, cols);
  std::vector<double> cost(n * n, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double w = weights[i * cols + j];
      if (std::isnan(w)) throw InvalidArgument("NaN edge weight");
      cost[i * n + j] = -std::max(w, 0.0);
    }
  }
  auto weight_of = [&](const std::vector<std::size_t>& row_to_col) {
    double total = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
      const std::size_t j = row_to_col[i];
      if (j < cols) total += std::max(weights[i * cols + j], 0.0);
    }
    return total;
  };

  SquareAssignment sol = solve_min_cost(cost, n);
  const std::vector<std::size_t> optimal = sol.row_to_col;
  const double best = weight_of(optimal);
  lexicographic_refine(cost, n, sol);
  if (weight_of(sol.row_to_col) < best - kTightTolerance * static_cast<double>(n)) {
    sol.row_to_col = optimal;
  }

  for (std::size_t i = 0; i < rows; ++i) {
    const std::size_t j = sol.row_to_col[i];
    if (j >= cols) continue;
    const double w = weights[i * cols + j];
    if (w > 0.0) {
      result.pairs.emplace_back(i, j);
      result.total_weight += w;
    }
  }
  return result;
}

Matching max_weight_matching(const WeightedBipartiteGraph& g) {
  return max_weight_matching(g.weights, g.rows(), g.cols());
}

}  // namespace taxonap
