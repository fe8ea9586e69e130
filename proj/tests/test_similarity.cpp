#include <doctest.h>

#include <random>

#include "support.hpp"
#include "taxonap/errors.hpp"
#include "taxonap/similarity.hpp"

using namespace taxonap;
using namespace taxonap::testing;
using doctest::Approx;

TEST_CASE("alpha schedule") {
  const auto cfg = SimilarityConfig::taxonomic();
  auto a = alpha_schedule(cfg, 3);
  CHECK(a.list == 0.25);
  CHECK(a.control_flow == 0.75);
  a = alpha_schedule(cfg, 1);
  CHECK(a.list == 0.5);
  CHECK(a.control_flow == 0.5);
  a = alpha_schedule(cfg, 9);
  CHECK(a.list == Approx(0.1).epsilon(1e-15));
  CHECK(a.control_flow == Approx(0.9).epsilon(1e-15));
  for (std::size_t l = 0; l < 50; ++l) {
    const auto w = alpha_schedule(cfg, l);
    CHECK(w.list + w.control_flow == Approx(1.0).epsilon(1e-15));
  }

  auto fixed = SimilarityConfig::taxonomic();
  fixed.with_static_alpha(0.3, 0.7);
  CHECK(alpha_schedule(fixed, 12).list == 0.3);
  CHECK_THROWS_AS(fixed.with_static_alpha(0.3, 0.3), InvalidArgument);
  CHECK_THROWS_AS(fixed.with_static_alpha(-0.5, 1.5), InvalidArgument);
}

TEST_CASE("trace similarity composition") {
  const double list = 0.57, cf = 0.41;
  CHECK(std::abs(sim_trace(list, cf, {0.25, 0.75}) - (list / 4.0 + 3.0 * cf / 4.0)) <= 1e-12);
  CHECK(sim_trace(0.3, 0.9, {1.0, 0.0}) == 0.3);
}

TEST_CASE("control-flow and list similarity on T0") {
  const auto t = make_t0();
  const CodeSimilarity sim(t, SimilarityKind::kSanchez);
  const std::vector<std::string> one{"A1"};
  CHECK(sim_cf(one, one, sim) == 1.0);
  const std::vector<std::string> q{"A1", "B1"};
  const std::vector<std::string> c{"B1", "A1"};
  CHECK(sim_cf(q, c, sim) == 0.5);

  const std::vector<Diagnosis> d1{{"A1", 1}};
  const std::vector<Diagnosis> d2{{"B1", 1}};
  CHECK(sim_list(d1, d1, sim) == 1.0);
  CHECK(sim_list(d1, d2, sim) == 0.0);
  // Secondary diagnosis one rank away: sim(A1, A2) * 0.5.
  const std::vector<Diagnosis> d3{{"B1", 1}, {"A2", 2}};
  CHECK(sim_list(d1, d3, sim) == Approx(0.5 * std::log(2.0) / std::log(3.0)).epsilon(1e-12));

  const std::vector<std::string> none;
  CHECK_THROWS_AS(sim_cf(none, one, sim), InvalidArgument);
  CHECK_THROWS_AS(sim_list(std::vector<Diagnosis>{}, d1, sim), InvalidArgument);
}

TEST_CASE("breakdown of a full comparison") {
  const auto t = make_t0();
  const TraceSimilarity ts(t, t, SimilarityConfig::taxonomic());
  const auto cand = make_case("c1", {{"A1", 1}, {"B", 2}}, {"A1", "B1", "A2"});

  SUBCASE("self similarity") {
    const auto q = TraceQuery::from_case_prefix(cand, 3);
    const auto b = ts.compare(q, cand);
    CHECK(b.sim_list == 1.0);
    CHECK(b.sim_cf == 1.0);
    CHECK(b.sim_trace == 1.0);
    CHECK(b.alpha.list == 0.25);
    CHECK(b.cf_matching.size() == 3);
    CHECK(b.list_matching.size() == 2);
  }
  SUBCASE("edges carry both factors") {
    TraceQuery q;
    q.diagnoses = {{"A2", 1}};
    q.events = {"B1"};
    const auto b = ts.compare(q, cand);
    REQUIRE(b.cf_matching.size() == 1);
    const auto& e = b.cf_matching[0];
    CHECK(e.left_code == "B1");
    CHECK(e.right_code == "B1");
    CHECK(e.right_pos == 2);
    CHECK(e.similarity == 1.0);
    CHECK(e.order_weight == 0.5);
    CHECK(e.weight == 0.5);
    CHECK(b.sim_cf == 0.5);
    CHECK(b.sim_trace == Approx(0.5 * b.sim_list + 0.5 * b.sim_cf).epsilon(1e-12));
  }
  SUBCASE("static weights") {
    auto cfg = SimilarityConfig::taxonomic();
    cfg.with_static_alpha(1.0, 0.0);
    const TraceSimilarity only_list(t, t, cfg);
    TraceQuery q;
    q.diagnoses = {{"A2", 1}};
    q.events = {"B1"};
    const auto b = only_list.compare(q, cand);
    CHECK(b.sim_trace == b.sim_list);
  }
  SUBCASE("query without events") {
    TraceQuery q;
    q.diagnoses = {{"A1", 1}};
    const auto b = ts.compare(q, cand);
    CHECK(b.sim_cf == 0.0);
    CHECK(b.alpha.list == 1.0);
    CHECK(b.sim_trace == 1.0);
  }
  SUBCASE("prefix beyond the trace") {
    CHECK_THROWS_AS(TraceQuery::from_case_prefix(cand, 4), InvalidArgument);
  }
}

TEST_CASE("property: similarities stay in [0, 1] under the length filter") {
  const auto t = make_t0();
  std::mt19937_64 rng(1234);
  for (const auto& cfg : {SimilarityConfig::taxonomic(), SimilarityConfig::boolean()}) {
    const TraceSimilarity ts(t, t, cfg);
    const auto log = random_t0_log(rng, 30, 6);
    for (const auto& q_case : log.cases) {
      for (std::size_t k = 1; k < q_case.trace.size(); ++k) {
        const auto q = TraceQuery::from_case_prefix(q_case, k);
        for (const auto& c : log.cases) {
          if (c.trace.size() < k + 1) continue;
          const auto b = ts.compare(q, c);
          CHECK(b.sim_cf >= 0.0);
          CHECK(b.sim_cf <= 1.0);
          CHECK(b.sim_list >= 0.0);
          CHECK(b.sim_list <= 1.0);
          CHECK(b.sim_trace >= 0.0);
          CHECK(b.sim_trace <= 1.0);
          CHECK(std::abs(b.sim_trace - (b.alpha.list * b.sim_list + b.alpha.control_flow * b.sim_cf)) <= 1e-12);
        }
      }
      const auto full = TraceQuery::from_case_prefix(q_case, q_case.procedure_count());
      CHECK(ts.compare(full, q_case).sim_trace == Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("property: boolean control flow counts aligned exact matches") {
  std::vector<TaxonomyEdge> edges;
  std::vector<std::string> codes;
  for (int i = 0; i < 20; ++i) {
    codes.push_back("L" + std::to_string(i));
    edges.push_back({codes.back(), "R"});
  }
  const auto flat = parse_generic_taxonomy("flat", edges);
  const CodeSimilarity sim(flat, SimilarityKind::kBoolean);
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::size_t> len(1, 8);
  std::bernoulli_distribution copy(0.5);
  for (int round = 0; round < 200; ++round) {
    auto pool = codes;
    std::shuffle(pool.begin(), pool.end(), rng);
    const std::size_t m = len(rng);
    const std::size_t n = std::min(m, len(rng));
    // Candidate takes the first m shuffled codes; a query position either
    // copies the candidate code at that position or takes an unused code.
    std::vector<std::string> cand(pool.begin(), pool.begin() + m);
    std::vector<std::string> query;
    std::size_t fresh = m, aligned = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (copy(rng)) {
        query.push_back(cand[i]);
        ++aligned;
      } else {
        query.push_back(pool[fresh++]);
      }
    }
    CHECK(sim_cf(query, cand, sim) == Approx(static_cast<double>(aligned) / static_cast<double>(n)).epsilon(1e-15));
  }
}
