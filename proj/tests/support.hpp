#pragma once

// Fixtures, independent oracles and hand-rolled generators shared by the
// unit and acceptance binaries.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "taxonap/eventlog.hpp"
#include "taxonap/taxonomy.hpp"

namespace taxonap::testing {

// R > {A > {A1, A2}, B > {B1}}
inline std::vector<TaxonomyEdge> t0_edges() {
  return {{"A", "R"}, {"B", "R"}, {"A1", "A"}, {"A2", "A"}, {"B1", "B"}};
}

inline Taxonomy make_t0(TaxonomyOptions options = {}) {
  const auto edges = t0_edges();
  return parse_generic_taxonomy("T0", edges, options);
}

// One fixed-width CMS order-file line.
inline std::string order_line(int order, const std::string& code, bool billable, const std::string& desc) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%05d %-7s %c %-60s %s\n", order, code.c_str(), billable ? '1' : '0',
                desc.substr(0, 60).c_str(), desc.c_str());
  return buf;
}

// ---------------------------------------------------------------------------
// Taxonomy oracle: counts by explicit traversal of an edge list, no caching.

struct EdgeOracle {
  std::map<std::string, std::vector<std::string>> parents;
  std::map<std::string, std::vector<std::string>> children;
  std::set<std::string> nodes;

  explicit EdgeOracle(const std::vector<TaxonomyEdge>& edges) {
    for (const auto& e : edges) {
      parents[e.child].push_back(e.parent);
      children[e.parent].push_back(e.child);
      nodes.insert(e.child);
      nodes.insert(e.parent);
    }
  }

  std::set<std::string> subsumers(const std::string& c) const {
    std::set<std::string> seen{c};
    std::vector<std::string> stack{c};
    while (!stack.empty()) {
      const auto cur = stack.back();
      stack.pop_back();
      const auto it = parents.find(cur);
      if (it == parents.end()) continue;
      for (const auto& p : it->second) {
        if (seen.insert(p).second) stack.push_back(p);
      }
    }
    return seen;
  }

  bool is_leaf(const std::string& c) const { return !children.contains(c); }

  std::set<std::string> leaves(const std::string& c) const {
    std::set<std::string> out;
    std::set<std::string> seen{c};
    std::vector<std::string> stack{c};
    while (!stack.empty()) {
      const auto cur = stack.back();
      stack.pop_back();
      if (is_leaf(cur)) out.insert(cur);
      const auto it = children.find(cur);
      if (it == children.end()) continue;
      for (const auto& k : it->second) {
        if (seen.insert(k).second) stack.push_back(k);
      }
    }
    return out;
  }

  std::size_t max_leaves() const {
    std::size_t n = 0;
    for (const auto& c : nodes) n += is_leaf(c) ? 1 : 0;
    return n;
  }

  double ic(const std::string& c) const {
    const double l = static_cast<double>(leaves(c).size());
    const double s = static_cast<double>(subsumers(c).size());
    return -std::log((l / s + 1.0) / (static_cast<double>(max_leaves()) + 1.0));
  }

  std::string lcs(const std::string& a, const std::string& b) const {
    const auto sa = subsumers(a);
    const auto sb = subsumers(b);
    std::string best;
    double best_ic = -1.0;
    for (const auto& c : sa) {  // std::set iterates in code order
      if (!sb.contains(c)) continue;
      const double v = ic(c);
      if (v > best_ic + 1e-15) {
        best_ic = v;
        best = c;
      }
    }
    return best;
  }

  double sim(const std::string& a, const std::string& b) const {
    if (a == b) return 1.0;
    const double den = ic(a) + ic(b);
    if (den <= 0.0) return 0.0;
    return 2.0 * ic(lcs(a, b)) / den;
  }
};

// Random rooted DAG: node k > 0 picks 1..max_parents parents among nodes
// 0..k-1, so the graph is acyclic with single root "n0".
inline std::vector<TaxonomyEdge> random_dag(std::mt19937_64& rng, std::size_t nodes, std::size_t max_parents) {
  std::vector<TaxonomyEdge> edges;
  for (std::size_t k = 1; k < nodes; ++k) {
    std::uniform_int_distribution<std::size_t> count(1, std::min(max_parents, k));
    std::uniform_int_distribution<std::size_t> pick(0, k - 1);
    std::set<std::size_t> chosen;
    const std::size_t want = count(rng);
    while (chosen.size() < want) chosen.insert(pick(rng));
    for (auto p : chosen) edges.push_back({"n" + std::to_string(k), "n" + std::to_string(p)});
  }
  return edges;
}

// ---------------------------------------------------------------------------
// Matching oracle: best total over every injection of the smaller side.

inline double brute_force_matching(const std::vector<double>& w, std::size_t rows, std::size_t cols) {
  const bool transpose = rows > cols;
  const std::size_t small = transpose ? cols : rows;
  const std::size_t large = transpose ? rows : cols;
  auto at = [&](std::size_t s, std::size_t l) { return transpose ? w[l * cols + s] : w[s * cols + l]; };
  std::vector<std::size_t> perm(large);
  std::iota(perm.begin(), perm.end(), 0);
  double best = 0.0;
  // Every injection appears as the first `small` entries of some permutation.
  do {
    double total = 0.0;
    for (std::size_t s = 0; s < small; ++s) total += at(s, perm[s]);
    best = std::max(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// ---------------------------------------------------------------------------
// Event-log builders

inline Case make_case(const std::string& id, std::vector<Diagnosis> diagnoses, const std::vector<std::string>& codes,
                      Timestamp admit = 0, const std::string& tax = "T0") {
  Case c;
  c.case_id = id;
  c.diagnoses = std::move(diagnoses);
  c.admit_time = admit;
  Timestamp ts = admit;
  int i = 0;
  for (const auto& code : codes) {
    c.trace.push_back({id + ":" + std::to_string(i++), code, tax, ts, 1});
    ts += 60;
  }
  c.trace.push_back({id + ":END", std::string(kEndActivity), std::string(kEndActivity), ts, 1});
  return c;
}

inline EventLog make_log(std::string id, std::vector<Case> cases, const std::string& dx = "T0",
                         const std::string& px = "T0") {
  EventLog log;
  log.id = std::move(id);
  log.diagnosis_taxonomy = dx;
  log.procedure_taxonomy = px;
  log.cases = std::move(cases);
  return log;
}

// Random log over T0 leaves. Every case has the primary diagnosis "A1" so the
// category check sees one category.
inline EventLog random_t0_log(std::mt19937_64& rng, std::size_t cases, std::size_t max_len) {
  const std::vector<std::string> leaves = {"A1", "A2", "B1"};
  const std::vector<std::string> all = {"A", "A1", "A2", "B", "B1"};
  std::uniform_int_distribution<std::size_t> len(1, max_len);
  std::uniform_int_distribution<std::size_t> pick_leaf(0, leaves.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_any(0, all.size() - 1);
  std::uniform_int_distribution<int> extra(0, 2);
  std::vector<Case> out;
  for (std::size_t i = 0; i < cases; ++i) {
    std::vector<Diagnosis> dx{{"A1", 1}};
    const int k = extra(rng);
    for (int s = 0; s < k; ++s) dx.push_back({all[pick_any(rng)], s + 2});
    std::vector<std::string> codes(len(rng));
    for (auto& c : codes) c = leaves[pick_leaf(rng)];
    char id[32];
    std::snprintf(id, sizeof id, "c%03zu", i);
    out.push_back(make_case(id, std::move(dx), codes, static_cast<Timestamp>(i) * 3600));
  }
  return make_log("A1", std::move(out));
}

}  // namespace taxonap::testing
