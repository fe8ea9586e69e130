#include <doctest.h>
#include <httplib.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <thread>

#include "support.hpp"
#include "taxonap/errors.hpp"
#include "taxonap/service.hpp"

using namespace taxonap;
using namespace taxonap::testing;
using nlohmann::json;

namespace {

SessionState t0_session() {
  SessionState s;
  s.taxonomies.emplace("T0", std::make_unique<Taxonomy>(make_t0()));
  s.add_log(make_log("A1", {make_case("c1", {{"A1", 1}}, {"A1", "B1"}, 10),
                            make_case("c2", {{"A1", 1}, {"B1", 2}}, {"A1", "A2"}, 20),
                            make_case("c3", {{"A1", 1}}, {"A2", "B1", "A1"}, 30)}));
  return s;
}

json body_of(const ApiResponse& r) { return json::parse(r.body); }

}  // namespace

TEST_CASE("predict endpoint") {
  const auto state = t0_session();
  const Api api(state);

  SUBCASE("defaults and shape") {
    const auto r = api.predict(R"({"log_id":"A1","diagnoses":[{"code":"A1"}],"events":["A1"]})");
    REQUIRE(r.status == 200);
    const auto j = body_of(r);
    CHECK(j["n"] == 5);
    CHECK(j["variant"] == "T");
    CHECK(j["mode"] == "score_sum");
    CHECK(j["pool_size"] == 3);
    CHECK(j["query_fingerprint"].get<std::string>().size() == 16);
    REQUIRE_FALSE(j["candidates"].empty());
    const auto& top = j["candidates"][0];
    CHECK(top["rank"] == 1);
    CHECK(top.contains("description"));
    CHECK(top["explanations"].size() <= 3);
    const auto& ex = top["explanations"][0];
    CHECK(ex["alpha"]["list"] == 0.5);
    CHECK(ex["cf_matching"][0].contains("order_weight"));
  }
  SUBCASE("repeated requests give identical bodies") {
    const std::string req = R"({"log_id":"A1","diagnoses":[{"code":"A1","seq":1}],"events":["A2"],"n":2})";
    CHECK(api.predict(req).body == api.predict(req).body);
  }
  SUBCASE("seq defaults to list position and input order does not matter") {
    const auto a = api.predict(R"({"log_id":"A1","diagnoses":[{"code":"A1"},{"code":"B1"}],"events":["A1"]})");
    const auto b =
        api.predict(R"({"log_id":"A1","diagnoses":[{"code":"B1","seq":2},{"code":"A1","seq":1}],"events":["A1"]})");
    CHECK(a.body == b.body);
  }
  SUBCASE("baseline variant and dedup mode") {
    const auto j = body_of(
        api.predict(R"({"log_id":"A1","diagnoses":[{"code":"A1"}],"events":["A1"],"variant":"B","mode":"dedup_first"})"));
    CHECK(j["variant"] == "B");
    for (const auto& c : j["candidates"]) CHECK(c["supporters"].size() == 1);
  }
  SUBCASE("unknown code") {
    const auto r = api.predict(R"({"log_id":"A1","diagnoses":[{"code":"A1"}],"events":["ZZZZ"]})");
    CHECK(r.status == 422);
    CHECK(body_of(r) == json{{"error", "unknown_code"}, {"code", "ZZZZ"}});
    CHECK(api.predict(R"({"log_id":"A1","diagnoses":[{"code":"Q"}]})").status == 422);
  }
  SUBCASE("unknown log") {
    const auto r = api.predict(R"({"log_id":"X99","diagnoses":[{"code":"A1"}]})");
    CHECK(r.status == 404);
    CHECK(body_of(r)["log_id"] == "X99");
  }
  SUBCASE("bad requests") {
    for (const char* b : {"not json", "[]", R"({"diagnoses":[{"code":"A1"}]})", R"({"log_id":"A1"})",
                          R"({"log_id":"A1","diagnoses":[]})",
                          R"({"log_id":"A1","diagnoses":[{"code":"A1"}],"events":["END"]})",
                          R"({"log_id":"A1","diagnoses":[{"code":"A1"}],"n":0})",
                          R"({"log_id":"A1","diagnoses":[{"code":"A1"}],"mode":"best"})",
                          R"({"log_id":"A1","diagnoses":[{"code":"A1"}],"variant":"X"})",
                          R"({"log_id":"A1","diagnoses":[{"code":"A1","seq":1},{"code":"B1","seq":1}]})"}) {
      const auto r = api.predict(b);
      CHECK_MESSAGE(r.status == 400, b);
      CHECK(body_of(r)["error"] == "bad_request");
    }
  }
}

TEST_CASE("taxonomy and log endpoints") {
  const auto state = t0_session();
  const Api api(state);

  const auto leaf = body_of(api.taxonomy_code("T0", "A1"));
  CHECK(leaf["is_leaf"] == true);
  CHECK(leaf["ancestors"] == json{"A", "R"});
  CHECK(leaf["ic"].get<double>() == doctest::Approx(std::log(3.0)));
  const auto root = body_of(api.taxonomy_code("T0", "R"));
  CHECK(root["ic"] == 0.0);
  CHECK(root["is_leaf"] == false);
  CHECK(api.taxonomy_code("T9", "A1").status == 404);
  CHECK(body_of(api.taxonomy_code("T0", "ZZ"))["error"] == "unknown_code");

  const auto logs = body_of(api.logs());
  REQUIRE(logs.size() == 1);
  CHECK(logs[0]["id"] == "A1");
  CHECK(logs[0]["n_traces"] == 3);
  const SessionState empty;
  CHECK(body_of(Api(empty).logs()) == json::array());

  const auto stats = body_of(api.log_stats("A1"));
  CHECK(stats["n_trace_variants"] == 3);
  CHECK(api.log_stats("nope").status == 404);
}

TEST_CASE("session loading rejects logs without taxonomies") {
  SessionState s;
  CHECK_THROWS_AS(s.add_log(make_log("A1", {make_case("c1", {{"A1", 1}}, {"A1"})})), DataError);
}

TEST_CASE("HTTP transport") {
  const auto state = t0_session();
  const Api api(state);
  httplib::Server server;
  bind_routes(server, api);
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread worker([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto res = client.Post("/v1/predict", R"({"log_id":"A1","diagnoses":[{"code":"A1"}],"events":["ZZZZ"]})",
                         "application/json");
  REQUIRE(res);
  CHECK(res->status == 422);
  CHECK(json::parse(res->body)["code"] == "ZZZZ");
  CHECK(res->get_header_value("Content-Type") == "application/json");

  res = client.Get("/v1/taxonomy/T0/code/B1");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(json::parse(res->body)["ancestors"] == json{"B", "R"});

  res = client.Get("/v1/logs/A1/stats");
  REQUIRE(res);
  CHECK(json::parse(res->body)["n_traces"] == 3);

  res = client.Get("/v1/logs");
  REQUIRE(res);
  CHECK(json::parse(res->body).size() == 1);

  server.stop();
  worker.join();
}

TEST_CASE("service configuration") {
  const auto cfg = parse_service_config(
      "# comment\n"
      "host = 0.0.0.0\n"
      "port = 9000\n"
      "taxonomy.dx.format = icd10cm\n"
      "taxonomy.dx.path = dx.txt\n"
      "taxonomy.px.path = /abs/px.txt\n"
      "log = logs/a.json\n"
      "log = logs/b.json\n"
      "default.n = 3\n"
      "default.mode = dedup_first\n",
      "/base");
  CHECK(cfg.host == "0.0.0.0");
  CHECK(cfg.port == 9000);
  CHECK(cfg.taxonomies.at("dx").path == "/base/dx.txt");
  CHECK(cfg.taxonomies.at("px").path == "/abs/px.txt");
  CHECK(cfg.logs.size() == 2);
  CHECK(cfg.default_n == 3);
  CHECK(cfg.default_mode == RankingMode::kDedupFirst);
  CHECK_THROWS_AS(parse_service_config("colour = blue\n"), MalformedLine);
  CHECK_THROWS_AS(parse_service_config("port\n"), MalformedLine);
  CHECK_THROWS_AS(parse_service_config("default.n = 0\n"), MalformedLine);
}

TEST_CASE("command-line smoke test") {
  const auto dir = std::filesystem::temp_directory_path() / ("taxonap_cli_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  const std::string cli = TAXONAP_CLI_PATH;
  auto run = [](const std::string& cmd) {
    const int rc = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  };
  CHECK(run(cli) == 1);
  CHECK(run(cli + " synth --cases 30 --out " + dir.string()) == 0);
  CHECK(std::filesystem::exists(dir / "K50.json"));
  CHECK(run(cli + " stats --log " + (dir / "K50.json").string()) == 0);
  const std::string tax = " --tax-cm " + (dir / "diagnoses.tsv").string() + " --tax-pcs " + (dir / "procedures.tsv").string();
  CHECK(run(cli + " evaluate --log " + (dir / "K50.json").string() + tax + " --out " + (dir / "r.csv").string()) == 0);
  CHECK(std::filesystem::exists(dir / "r_prefix.csv"));
  CHECK(run(cli + " predict --log " + (dir / "K50.json").string() + tax + " --diagnoses NOPE:1 --events Z1A") == 2);
  std::filesystem::remove_all(dir);
}
