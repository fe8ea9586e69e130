// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "support.hpp"
#include "taxonap/evaluation.hpp"
#include "taxonap/icd10.hpp"
#include "taxonap/matching.hpp"
#include "taxonap/predictor.hpp"
#include "taxonap/similarity.hpp"
#include "taxonap/synthetic.hpp"

using namespace taxonap;
using namespace taxonap::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_s;  // 0 = no runtime bound
  std::function<Outcome()> run;
};

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

Outcome toy_ic() {
  const auto t = make_t0();
  const double want_a = std::log(2.0), want_a1 = std::log(3.0);
  const bool ok = near(t.ic("R"), 0.0, 1e-9) && near(t.ic("A"), want_a, 1e-9) && near(t.ic("A1"), want_a1, 1e-9) &&
                  near(t.sim_sanchez("A1", "A2"), want_a / want_a1, 1e-9) && near(t.sim_sanchez("A1", "B1"), 0.0, 1e-9);
  return {ok, fmt("ic(A)=%.12f ic(A1)=%.12f sim(A1,A2)=%.12f", t.ic("A"), t.ic("A1"), t.sim_sanchez("A1", "A2"))};
}

Outcome order_file() {
  const auto t = load_taxonomy("icd10cm", "icd10cm", std::string(TAXONAP_DATA_DIR) + "/icd10cm-order-2021.txt");
  const double s1 = t.sim_sanchez("I214", "I2109");
  const double s2 = t.sim_sanchez("R570", "R578");
  return {near(s1, 0.85, 0.02) && near(s2, 0.93, 0.02), fmt("sim(I214,I2109)=%.4f sim(R570,R578)=%.4f", s1, s2)};
}

Outcome matching() {
  std::mt19937_64 rng(20210101);
  std::uniform_int_distribution<std::size_t> side(1, 6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::bernoulli_distribution zero(0.2);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const std::size_t rows = side(rng), cols = side(rng);
    std::vector<double> w(rows * cols);
    for (auto& x : w) x = zero(rng) ? 0.0 : u(rng);
    worst = std::max(worst, std::abs(max_weight_matching(w, rows, cols).total_weight - brute_force_matching(w, rows, cols)));
  }
  return {worst <= 1e-12, fmt("200 instances, max |solver - oracle| = %.3g", worst)};
}

Outcome composition() {
  const double v = sim_trace(0.57, 0.41, alpha_schedule(SimilarityConfig::taxonomic(), 3));
  return {near(v, 0.4525, 1e-12), fmt("sim_trace = %.15f", v)};
}

std::string full_run(const SyntheticWorld& w) {
  EvalOptions o;
  const auto loo = loo_evaluate(w.log, *w.diagnoses, *w.procedures, o);
  const auto report = make_report(w.log, loo, o.n);
  return log_table_csv(report) + prefix_table_csv(report) + report_json(report) + records_csv(loo.records_t) +
         records_csv(loo.records_b);
}

// Queries that have an exact clone (same diagnoses, same first k procedure
// codes) among the other cases; returns (queries checked, failures).
std::pair<std::size_t, std::size_t> clone_check(const SyntheticWorld& w, RankingMode mode) {
  const TraceSimilarity ts(*w.diagnoses, *w.procedures, SimilarityConfig::taxonomic());
  std::size_t checked = 0, failed = 0;
  for (const auto& q : w.log.cases) {
    for (std::size_t k = 1; k < q.trace.size(); ++k) {
      std::set<std::string> successors;
      for (const auto& c : w.log.cases) {
        if (c.case_id == q.case_id || c.diagnoses != q.diagnoses || c.trace.size() < k + 1) continue;
        bool same = true;
        for (std::size_t i = 0; i < k && same; ++i) same = c.trace[i].code == q.trace[i].code;
        if (same) successors.insert(c.trace[k].code);
      }
      if (successors.empty()) continue;
      ++checked;
      PredictorOptions o;
      o.mode = mode;
      o.exclude_case = q.case_id;
      const auto r = predict(TraceQuery::from_case_prefix(q, k), w.log, ts, o);
      if (r.candidates.empty() || !successors.contains(r.candidates.front().activity)) ++failed;
    }
  }
  return {checked, failed};
}

Outcome determinism_and_clones() {
  const auto w1 = make_synthetic({});
  const auto w2 = make_synthetic({});
  const bool identical = full_run(w1) == full_run(w2);
  const auto [checked, failed] = clone_check(w1, RankingMode::kScoreSum);
  const auto [checked_d, failed_d] = clone_check(w1, RankingMode::kDedupFirst);
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "(a) byte-identical=%s; (b) score_sum clone successor at rank 1: %zu/%zu queries "
                "(dedup_first: %zu/%zu)",
                identical ? "yes" : "no", checked - failed, checked, checked_d - failed_d, checked_d);
  return {identical && checked > 0 && failed == 0, buf};
}

Outcome metric_sanity() {
  const auto w = make_synthetic({});
  const auto& tax = *w.procedures;
  std::vector<std::string> leaves;
  for (Taxonomy::NodeId n = 0; n < tax.size(); ++n) {
    if (tax.is_leaf(n)) leaves.push_back(tax.code(n));
  }
  const std::string& root = tax.code(tax.root());
  std::vector<EvalRecord> oracle, unrelated;
  for (const auto& c : w.log.cases) {
    for (const auto& inst : prefixes(c)) {
      EvalRecord r;
      r.case_id = c.case_id;
      r.prefix_len = inst.prefix.size();
      r.true_next = inst.target.code;
      r.predicted = {leaves[r.prefix_len % leaves.size()], r.true_next};
      r.max_sim = max_similarity(tax, r.true_next, r.predicted);
      oracle.push_back(r);

      r.predicted.clear();
      for (const auto& l : leaves) {
        if (r.true_next == kEndActivity || tax.lcs(r.true_next, l) == root) r.predicted.push_back(l);
        if (r.predicted.size() == 5) break;
      }
      if (r.predicted.empty()) return {false, "no unrelated code for " + r.true_next};
      r.max_sim = max_similarity(tax, r.true_next, r.predicted);
      unrelated.push_back(r);
    }
  }
  const double hi = average_similarity(oracle);
  const double lo = average_similarity(unrelated);
  return {hi == 1.0 && lo == 0.0, fmt("oracle=%.12g unrelated=%.12g", hi, lo)};
}

Outcome harness() {
  const auto w = make_synthetic({});
  const auto loo = loo_evaluate(w.log, *w.diagnoses, *w.procedures);
  const auto report = make_report(w.log, loo, 5);
  const auto csv = log_table_csv(report);
  const auto prefix = prefix_table_csv(report);
  const std::string header =
      "log_id,n_traces,mean_length,std_length,avg_sim_B,avg_sim_T,n_variants,n_unique_events,n_unique_diagnoses,"
      "p_value\n";
  std::size_t total = 0;
  for (const auto& row : report.prefixes) total += row.count;
  const bool ok = csv.rfind(header, 0) == 0 && std::count(csv.begin(), csv.end(), '\n') == 2 &&
                  prefix.rfind("prefix_len,count,avg_sim_B,avg_sim_T,p_value\n", 0) == 0 &&
                  !report.prefixes.empty() && total == loo.records_t.size() &&
                  loo.records_t.size() == loo.records_b.size() && report.log.p_value.has_value();
  char buf[256];
  std::snprintf(buf, sizeof buf, "%zu instances, %zu prefix rows, avg_sim_B=%.4f avg_sim_T=%.4f p=%.3g",
                loo.records_t.size(), report.prefixes.size(), *report.log.avg_sim_b, report.log.avg_sim_t,
                *report.log.p_value);
  return {ok, buf};
}

Outcome t_test() {
  struct Fixture {
    std::vector<double> t, b;
    double p;
  };
  // Reference p-values from scipy.stats.ttest_rel(t, b, alternative="greater").
  const std::vector<Fixture> fixtures{
      {{0.9, 0.8, 0.75, 1.0, 0.6}, {0.7, 0.8, 0.5, 0.9, 0.65}, 0.07713643553965831},
      {{0.2, 0.4, 0.1, 0.3}, {0.25, 0.5, 0.05, 0.35}, 0.8405341040436123},
      {{1.0, 0.5, 0.75, 0.25, 1.0, 0.5}, {0.5, 0.5, 0.25, 0.25, 0.75, 0.5}, 0.04625750277521381},
  };
  double worst = 0.0;
  for (const auto& f : fixtures) worst = std::max(worst, std::abs(one_sided_paired_t_test(f.t, f.b) - f.p));
  return {worst <= 1e-6, fmt("max deviation %.3g", worst)};
}

Outcome separability() {
  SyntheticOptions opts;
  opts.near_miss = 0.9;
  opts.pathways = 10;
  opts.leaf_fanout = 10;
  const auto w = make_synthetic(opts);
  const auto loo = loo_evaluate(w.log, *w.diagnoses, *w.procedures);
  const auto report = make_report(w.log, loo, 5);
  const double b = *report.log.avg_sim_b, t = report.log.avg_sim_t, p = *report.log.p_value;
  return {t > b && p < 0.05, fmt("avg_sim_B=%.4f avg_sim_T=%.4f p=%.3g", b, t, p)};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "toy taxonomy IC exactness", 0, toy_ic},
      {2, "order-file similarity values", 30, order_file},
      {3, "matching optimality", 5, matching},
      {4, "trace similarity composition", 0, composition},
      {5, "predictor determinism and clone retrieval", 60, determinism_and_clones},
      {6, "metric endpoints", 0, metric_sanity},
      {7, "evaluation harness end to end", 600, harness},
      {8, "one-sided paired t-test", 0, t_test},
      {9, "taxonomic variant beats the baseline on near misses", 0, separability},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_s > 0 && secs > c.budget_s) {
      out.pass = false;
      out.detail += fmt(" [over budget of %.0f s]", c.budget_s);
    }
    if (!out.pass) ++failures;
    std::printf("%s %d %s (%.2f s): %s\n", out.pass ? "PASS" : "FAIL", c.id, c.name, secs, out.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
