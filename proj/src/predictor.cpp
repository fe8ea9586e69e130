#include "taxonap/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>

#include "taxonap/errors.hpp"
#include "taxonap/parallel.hpp"

namespace taxonap {

namespace {

constexpr double kGrid = 1e-12;

// Values within one grid step compare equal.
int compare_on_grid(double a, double b) {
  if (std::abs(a - b) <= kGrid) return 0;
  return a < b ? -1 : 1;
}

void fnv1a(std::uint64_t& h, std::string_view s) {
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  h ^= 0xff;  // field separator
  h *= 0x100000001b3ULL;
}

}  // namespace

std::string_view to_string(RankingMode mode) {
  return mode == RankingMode::kScoreSum ? "score_sum" : "dedup_first";
}

RankingMode parse_ranking_mode(std::string_view text) {
  if (text == "score_sum") return RankingMode::kScoreSum;
  if (text == "dedup_first") return RankingMode::kDedupFirst;
  throw InvalidArgument("unknown ranking mode '" + std::string(text) + "'");
}

bool ranks_before(const ScoredCase& a, const ScoredCase& b) {
  if (int c = compare_on_grid(a.sim_trace, b.sim_trace)) return c > 0;
  if (int c = compare_on_grid(a.sim_list, b.sim_list)) return c > 0;
  if (int c = compare_on_grid(a.sim_cf, b.sim_cf)) return c > 0;
  if (a.source->admit_time != b.source->admit_time) return a.source->admit_time > b.source->admit_time;
  return a.source->case_id < b.source->case_id;
}

std::vector<const Case*> candidate_pool(const EventLog& log, std::size_t query_len,
                                        std::optional<std::string_view> exclude_case) {
  std::vector<const Case*> pool;
  for (const auto& c : log.cases) {
    if (c.trace.size() < query_len + 1) continue;
    if (exclude_case && c.case_id == *exclude_case) continue;
    pool.push_back(&c);
  }
  return pool;
}

std::vector<std::string> PredictionResult::activities() const {
  std::vector<std::string> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) out.push_back(c.activity);
  return out;
}

std::string fingerprint(const TraceQuery& query) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& d : query.diagnoses) {
    fnv1a(h, d.code);
    fnv1a(h, std::to_string(d.seq));
  }
  fnv1a(h, "|");
  for (const auto& e : query.events) fnv1a(h, e);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

PredictionResult predict(const TraceQuery& query, const EventLog& log, const TraceSimilarity& similarity,
                         const PredictorOptions& options) {
  if (options.n == 0) throw InvalidArgument("n must be at least 1");
  if (query.diagnoses.empty()) throw InvalidArgument("query needs at least one diagnosis");
  for (const auto& e : query.events) {
    if (e == kEndActivity) throw InvalidArgument("END cannot appear inside a query prefix");
  }

  PredictionResult result;
  result.query_fingerprint = fingerprint(query);
  result.mode = options.mode;

  // An empty prefix still needs a successor, so the pool filter uses at
  // least length 1.
  const std::size_t qlen = query.events.size();
  const auto pool = candidate_pool(log, std::max<std::size_t>(qlen, 1), options.exclude_case);
  result.pool_size = pool.size();
  if (pool.empty()) return result;

  std::vector<ScoredCase> scored(pool.size());
  parallel_for(pool.size(), options.threads, [&](std::size_t i) {
    const Case& c = *pool[i];
    const auto b = similarity.compare(query, c);
    scored[i] = {&c, c.trace[qlen].code, b.sim_list, b.sim_cf, b.sim_trace};
  });
  std::sort(scored.begin(), scored.end(), ranks_before);

  struct Group {
    std::size_t first_rank = 0;
    std::vector<const ScoredCase*> members;
  };
  std::map<std::string, Group> groups;
  std::size_t considered = scored.size();
  if (options.mode == RankingMode::kScoreSum && options.retain > 0) {
    considered = std::min(considered, options.retain);
  }
  for (std::size_t r = 0; r < considered; ++r) {
    auto [it, inserted] = groups.try_emplace(scored[r].next_activity);
    if (inserted) it->second.first_rank = r;
    it->second.members.push_back(&scored[r]);
  }

  struct Ranked {
    const std::string* activity;
    const Group* group;
    double score;
  };
  std::vector<Ranked> ranked;
  ranked.reserve(groups.size());
  for (const auto& [activity, g] : groups) {
    double score = 0.0;
    if (options.mode == RankingMode::kScoreSum) {
      for (const auto* m : g.members) score += m->sim_trace;
    } else {
      score = g.members.front()->sim_trace;
    }
    // Candidates carry strictly positive evidence.
    if (score > 0.0) ranked.push_back({&activity, &g, score});
  }
  std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (int c = compare_on_grid(a.score, b.score)) return c > 0;
    return a.group->first_rank < b.group->first_rank;
  });
  if (ranked.size() > options.n) ranked.resize(options.n);

  for (const auto& r : ranked) {
    PredictionCandidate cand;
    cand.activity = *r.activity;
    cand.score = r.score;
    // dedup_first keeps only the surviving case as supporter.
    const std::size_t keep = options.mode == RankingMode::kScoreSum ? r.group->members.size() : 1;
    for (std::size_t k = 0; k < keep; ++k) {
      const auto* m = r.group->members[k];
      cand.supporters.push_back({m->source->case_id, m->sim_trace, m->sim_list, m->sim_cf});
    }
    const std::size_t explain = std::min(options.explain_top_k, keep);
    for (std::size_t k = 0; k < explain; ++k) {
      cand.explanations.push_back(similarity.compare(query, *r.group->members[k]->source));
    }
    result.candidates.push_back(std::move(cand));
  }
  return result;
}

}  // namespace taxonap
