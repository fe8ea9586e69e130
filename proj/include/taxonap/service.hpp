#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "taxonap/eventlog.hpp"
#include "taxonap/predictor.hpp"
#include "taxonap/taxonomy.hpp"

namespace httplib {
class Server;
}

namespace taxonap {

struct TaxonomySource {
  std::string format;  // icd10cm | icd10pcs | tsv
  std::filesystem::path path;
  std::filesystem::path blocks;
};

// Key-value startup file, one `key = value` per line, '#' comments:
//   host, port, threads, static_dir
//   taxonomy.<id>.format / .path / .blocks
//   log (repeatable)
//   default.n, default.mode, default.explain_top_k
// Relative paths resolve against `base_dir`. Throws MalformedLine.
struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t threads = 0;
  std::filesystem::path static_dir;
  std::map<std::string, TaxonomySource> taxonomies;
  std::vector<std::filesystem::path> logs;
  std::size_t default_n = 5;
  RankingMode default_mode = RankingMode::kScoreSum;
  std::size_t default_explain_top_k = 3;
};

ServiceConfig parse_service_config(std::string_view text, const std::filesystem::path& base_dir = {});
ServiceConfig load_service_config(const std::filesystem::path& path);
// TAXONAP_HOST and TAXONAP_PORT override the file values.
void apply_env_overrides(ServiceConfig& config);

// Everything a request can read. Immutable once serving starts.
struct SessionState {
  std::map<std::string, std::unique_ptr<Taxonomy>, std::less<>> taxonomies;
  std::map<std::string, EventLog, std::less<>> logs;
  std::size_t default_n = 5;
  RankingMode default_mode = RankingMode::kScoreSum;
  std::size_t default_explain_top_k = 3;
  std::size_t threads = 0;

  // Throws DataError when a log names a taxonomy that is not loaded or the
  // log is invalid.
  void add_log(EventLog log);
};

SessionState load_session(const ServiceConfig& config);

struct ApiResponse {
  int status = 200;
  std::string body;
};

// Request handlers, independent of the transport.
class Api {
 public:
  explicit Api(const SessionState& state) : state_(&state) {}

  // POST /v1/predict
  ApiResponse predict(std::string_view body) const;
  // GET /v1/taxonomy/{tax_id}/code/{code}
  ApiResponse taxonomy_code(std::string_view tax_id, std::string_view code) const;
  // GET /v1/logs
  ApiResponse logs() const;
  // GET /v1/logs/{id}/stats
  ApiResponse log_stats(std::string_view log_id) const;

 private:
  const SessionState* state_;
};

// Registers the /v1 routes (and static_dir, when set) on `server`.
void bind_routes(httplib::Server& server, const Api& api, const std::filesystem::path& static_dir = {});

// Blocks until the server stops. Returns false when the socket cannot be
// bound.
bool serve(const SessionState& state, const ServiceConfig& config);

}  // namespace taxonap
