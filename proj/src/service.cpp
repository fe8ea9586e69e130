#include "taxonap/service.hpp"

#include <algorithm>
#include <cstdlib>
#include <iostream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "taxonap/errors.hpp"
#include "taxonap/evaluation.hpp"
#include "taxonap/icd10.hpp"
#include "taxonap/similarity.hpp"
#include "text_util.hpp"

namespace taxonap {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Configuration

namespace {

std::size_t parse_count(std::string_view value, std::size_t line_no, std::string_view key) {
  const auto v = detail::parse_int<std::size_t>(value);
  if (!v) throw MalformedLine(line_no, std::string(key) + " expects a non-negative integer");
  return *v;
}

std::filesystem::path resolve(const std::filesystem::path& base, std::string_view value) {
  std::filesystem::path p(value);
  return p.is_relative() && !base.empty() ? base / p : p;
}

}  // namespace

ServiceConfig parse_service_config(std::string_view text, const std::filesystem::path& base_dir) {
  ServiceConfig cfg;
  const auto lines = detail::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    const auto line = detail::trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw MalformedLine(line_no, "expected key = value");
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string_view value = detail::trim(line.substr(eq + 1));
    if (key == "host") {
      cfg.host = value;
    } else if (key == "port") {
      const auto port = detail::parse_int<int>(value);
      if (!port || *port < 0 || *port > 65535) throw MalformedLine(line_no, "port out of range");
      cfg.port = *port;
    } else if (key == "threads") {
      cfg.threads = parse_count(value, line_no, key);
    } else if (key == "static_dir") {
      cfg.static_dir = resolve(base_dir, value);
    } else if (key == "log") {
      cfg.logs.push_back(resolve(base_dir, value));
    } else if (key == "default.n") {
      cfg.default_n = parse_count(value, line_no, key);
      if (cfg.default_n == 0) throw MalformedLine(line_no, "default.n must be at least 1");
    } else if (key == "default.mode") {
      try {
        cfg.default_mode = parse_ranking_mode(value);
      } catch (const InvalidArgument& e) {
        throw MalformedLine(line_no, e.what());
      }
    } else if (key == "default.explain_top_k") {
      cfg.default_explain_top_k = parse_count(value, line_no, key);
    } else if (key.rfind("taxonomy.", 0) == 0) {
      const auto dot = key.rfind('.');
      const std::string id = key.substr(9, dot - 9);
      const std::string field = key.substr(dot + 1);
      if (id.empty() || dot <= 9) throw MalformedLine(line_no, "expected taxonomy.<id>.<field>");
      auto& src = cfg.taxonomies[id];
      if (field == "format") {
        src.format = value;
      } else if (field == "path") {
        src.path = resolve(base_dir, value);
      } else if (field == "blocks") {
        src.blocks = resolve(base_dir, value);
      } else {
        throw MalformedLine(line_no, "unknown taxonomy field '" + field + "'");
      }
    } else {
      throw MalformedLine(line_no, "unknown key '" + key + "'");
    }
  }
  for (const auto& [id, src] : cfg.taxonomies) {
    if (src.path.empty()) throw DataError("taxonomy '" + id + "' has no path");
  }
  return cfg;
}

ServiceConfig load_service_config(const std::filesystem::path& path) {
  return parse_service_config(read_text_file(path), path.parent_path());
}

void apply_env_overrides(ServiceConfig& config) {
  if (const char* host = std::getenv("TAXONAP_HOST"); host && *host) config.host = host;
  if (const char* port = std::getenv("TAXONAP_PORT"); port && *port) {
    const auto p = detail::parse_int<int>(port);
    if (!p || *p < 0 || *p > 65535) throw InvalidArgument("TAXONAP_PORT is not a valid port");
    config.port = *p;
  }
}

void SessionState::add_log(EventLog log) {
  for (const auto* tax : {&log.diagnosis_taxonomy, &log.procedure_taxonomy}) {
    if (!taxonomies.contains(*tax)) {
      throw DataError("log '" + log.id + "' needs taxonomy '" + *tax + "', which is not loaded");
    }
  }
  validate(log);
  const std::string id = log.id;
  if (!logs.emplace(id, std::move(log)).second) throw DataError("duplicate log id '" + id + "'");
}

SessionState load_session(const ServiceConfig& config) {
  SessionState state;
  state.default_n = config.default_n;
  state.default_mode = config.default_mode;
  state.default_explain_top_k = config.default_explain_top_k;
  state.threads = config.threads;
  for (const auto& [id, src] : config.taxonomies) {
    const std::string format = src.format.empty() ? guess_taxonomy_format(src.path, id) : src.format;
    state.taxonomies.emplace(id, std::make_unique<Taxonomy>(load_taxonomy(id, format, src.path, src.blocks)));
  }
  for (const auto& path : config.logs) state.add_log(load_event_log(path));
  return state;
}

// ---------------------------------------------------------------------------
// Handlers

namespace {

ApiResponse reply(int status, const json& body) { return {status, body.dump() + "\n"}; }

ApiResponse error_reply(int status, std::string_view error, const std::string& message) {
  json body;
  body["error"] = error;
  body["message"] = message;
  return reply(status, body);
}

ApiResponse unknown_code_reply(const std::string& code) {
  json body;
  body["error"] = "unknown_code";
  body["code"] = code;
  return reply(422, body);
}

struct BadRequest {
  std::string message;
};

std::size_t positive_field(const json& body, const char* key, std::size_t fallback, bool allow_zero) {
  if (!body.contains(key)) return fallback;
  const auto& v = body[key];
  if (!v.is_number_integer() || v.get<long long>() < (allow_zero ? 0 : 1)) {
    throw BadRequest{std::string("'") + key + "' must be " + (allow_zero ? "a non-negative" : "a positive") +
                     " integer"};
  }
  return v.get<std::size_t>();
}

std::string string_field(const json& body, const char* key, std::string fallback) {
  if (!body.contains(key)) return fallback;
  if (!body[key].is_string()) throw BadRequest{std::string("'") + key + "' must be a string"};
  return body[key].get<std::string>();
}

json edge_json(const MatchedEdge& e) {
  json j;
  j["left_code"] = e.left_code;
  j["right_code"] = e.right_code;
  j["left_pos"] = e.left_pos;
  j["right_pos"] = e.right_pos;
  j["similarity"] = e.similarity;
  j["order_weight"] = e.order_weight;
  j["weight"] = e.weight;
  return j;
}

json breakdown_json(const SimilarityBreakdown& b) {
  json j;
  j["case_id"] = b.case_id;
  j["sim_list"] = b.sim_list;
  j["sim_cf"] = b.sim_cf;
  j["alpha"] = {{"list", b.alpha.list}, {"control_flow", b.alpha.control_flow}};
  j["sim_trace"] = b.sim_trace;
  j["list_matching"] = json::array();
  for (const auto& e : b.list_matching) j["list_matching"].push_back(edge_json(e));
  j["cf_matching"] = json::array();
  for (const auto& e : b.cf_matching) j["cf_matching"].push_back(edge_json(e));
  return j;
}

}  // namespace

ApiResponse Api::predict(std::string_view body_text) const {
  json body;
  try {
    body = json::parse(body_text);
  } catch (const json::exception& e) {
    return error_reply(400, "bad_request", std::string("invalid JSON: ") + e.what());
  }
  try {
    if (!body.is_object()) throw BadRequest{"body must be a JSON object"};
    if (!body.contains("log_id") || !body["log_id"].is_string()) throw BadRequest{"'log_id' is required"};
    const std::string log_id = body["log_id"].get<std::string>();
    const auto log_it = state_->logs.find(log_id);
    if (log_it == state_->logs.end()) {
      json err;
      err["error"] = "unknown_log";
      err["log_id"] = log_id;
      return reply(404, err);
    }
    const EventLog& log = log_it->second;
    const Taxonomy& diag_tax = *state_->taxonomies.at(log.diagnosis_taxonomy);
    const Taxonomy& proc_tax = *state_->taxonomies.at(log.procedure_taxonomy);

    TraceQuery query;
    if (!body.contains("diagnoses") || !body["diagnoses"].is_array() || body["diagnoses"].empty()) {
      throw BadRequest{"'diagnoses' must be a non-empty array"};
    }
    for (const auto& d : body["diagnoses"]) {
      if (!d.is_object() || !d.contains("code") || !d["code"].is_string()) {
        throw BadRequest{"each diagnosis needs a string 'code'"};
      }
      Diagnosis diag{d["code"].get<std::string>(), 0};
      if (!d.contains("seq")) {
        diag.seq = static_cast<int>(query.diagnoses.size()) + 1;
      } else if (d["seq"].is_number_integer() && d["seq"].get<long long>() >= 1 && d["seq"].get<long long>() <= 1000) {
        diag.seq = d["seq"].get<int>();
      } else {
        throw BadRequest{"diagnosis 'seq' must be a positive integer"};
      }
      query.diagnoses.push_back(std::move(diag));
    }
    std::sort(query.diagnoses.begin(), query.diagnoses.end(),
              [](const Diagnosis& a, const Diagnosis& b) { return a.seq < b.seq; });
    for (std::size_t i = 1; i < query.diagnoses.size(); ++i) {
      if (query.diagnoses[i].seq == query.diagnoses[i - 1].seq) throw BadRequest{"duplicate diagnosis seq"};
    }
    if (body.contains("events")) {
      if (!body["events"].is_array()) throw BadRequest{"'events' must be an array of codes"};
      for (const auto& e : body["events"]) {
        if (!e.is_string()) throw BadRequest{"'events' must be an array of codes"};
        query.events.push_back(e.get<std::string>());
      }
    }
    for (const auto& d : query.diagnoses) {
      if (!diag_tax.contains(d.code)) return unknown_code_reply(d.code);
    }
    for (const auto& e : query.events) {
      if (e == kEndActivity) throw BadRequest{"END cannot appear in 'events'"};
      if (!proc_tax.contains(e)) return unknown_code_reply(e);
    }

    PredictorOptions opts;
    opts.n = positive_field(body, "n", state_->default_n, false);
    opts.explain_top_k = positive_field(body, "explain_top_k", state_->default_explain_top_k, true);
    opts.threads = state_->threads;
    Variant variant = Variant::kT;
    try {
      opts.mode = parse_ranking_mode(string_field(body, "mode", std::string(to_string(state_->default_mode))));
      variant = parse_variant(string_field(body, "variant", "T"));
    } catch (const InvalidArgument& e) {
      throw BadRequest{e.what()};
    }

    const auto cfg = variant == Variant::kT ? SimilarityConfig::taxonomic() : SimilarityConfig::boolean();
    const TraceSimilarity sim(diag_tax, proc_tax, cfg);
    const auto result = taxonap::predict(query, log, sim, opts);

    json out;
    out["query_fingerprint"] = result.query_fingerprint;
    out["log_id"] = log.id;
    out["variant"] = to_string(variant);
    out["mode"] = to_string(result.mode);
    out["n"] = opts.n;
    out["pool_size"] = result.pool_size;
    out["candidates"] = json::array();
    for (std::size_t r = 0; r < result.candidates.size(); ++r) {
      const auto& c = result.candidates[r];
      json jc;
      jc["rank"] = r + 1;
      jc["activity"] = c.activity;
      const auto node = proc_tax.find(c.activity);
      jc["description"] = node ? proc_tax.description(*node) : std::string();
      jc["score"] = c.score;
      jc["supporters"] = json::array();
      for (const auto& s : c.supporters) {
        jc["supporters"].push_back(
            {{"case_id", s.case_id}, {"sim_trace", s.sim_trace}, {"sim_list", s.sim_list}, {"sim_cf", s.sim_cf}});
      }
      jc["explanations"] = json::array();
      for (const auto& b : c.explanations) jc["explanations"].push_back(breakdown_json(b));
      out["candidates"].push_back(std::move(jc));
    }
    return reply(200, out);
  } catch (const BadRequest& e) {
    return error_reply(400, "bad_request", e.message);
  } catch (const UnknownConcept& e) {
    return unknown_code_reply(e.code());
  } catch (const InvalidArgument& e) {
    return error_reply(400, "bad_request", e.what());
  }
}

ApiResponse Api::taxonomy_code(std::string_view tax_id, std::string_view code) const {
  const auto it = state_->taxonomies.find(tax_id);
  if (it == state_->taxonomies.end()) {
    json err;
    err["error"] = "unknown_taxonomy";
    err["taxonomy"] = tax_id;
    return reply(404, err);
  }
  const Taxonomy& tax = *it->second;
  const auto node = tax.find(code);
  if (!node) {
    json err;
    err["error"] = "unknown_code";
    err["code"] = code;
    return reply(404, err);
  }
  json out;
  out["taxonomy"] = tax.id();
  out["code"] = tax.code(*node);
  out["description"] = tax.description(*node);
  out["ancestors"] = json::array();
  const auto chain = tax.ancestors(*node);
  for (std::size_t i = 1; i < chain.size(); ++i) out["ancestors"].push_back(tax.code(chain[i]));
  out["ic"] = tax.ic(*node);
  out["is_leaf"] = tax.is_leaf(*node);
  return reply(200, out);
}

ApiResponse Api::logs() const {
  json out = json::array();
  for (const auto& [id, log] : state_->logs) {
    out.push_back({{"id", id},
                   {"n_traces", log.cases.size()},
                   {"diagnosis_taxonomy", log.diagnosis_taxonomy},
                   {"procedure_taxonomy", log.procedure_taxonomy}});
  }
  return reply(200, out);
}

ApiResponse Api::log_stats(std::string_view log_id) const {
  const auto it = state_->logs.find(log_id);
  if (it == state_->logs.end()) {
    json err;
    err["error"] = "unknown_log";
    err["log_id"] = log_id;
    return reply(404, err);
  }
  const LogStats s = stats(it->second);
  json out;
  out["n_traces"] = s.n_traces;
  out["n_trace_variants"] = s.n_trace_variants;
  out["n_unique_events"] = s.n_unique_events;
  out["n_unique_diagnoses"] = s.n_unique_diagnoses;
  out["mean_trace_length"] = s.mean_trace_length;
  out["std_trace_length"] = s.std_trace_length;
  return reply(200, out);
}

// ---------------------------------------------------------------------------
// Transport

namespace {

void send(httplib::Response& res, const ApiResponse& r) {
  res.status = r.status;
  res.set_content(r.body, "application/json");
}

}  // namespace

void bind_routes(httplib::Server& server, const Api& api, const std::filesystem::path& static_dir) {
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  server.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
  server.Post("/v1/predict", [&api](const httplib::Request& req, httplib::Response& res) {
    send(res, api.predict(req.body));
  });
  server.Get("/v1/taxonomy/:tax/code/:code", [&api](const httplib::Request& req, httplib::Response& res) {
    send(res, api.taxonomy_code(req.path_params.at("tax"), req.path_params.at("code")));
  });
  server.Get("/v1/logs", [&api](const httplib::Request&, httplib::Response& res) { send(res, api.logs()); });
  server.Get("/v1/logs/:id/stats", [&api](const httplib::Request& req, httplib::Response& res) {
    send(res, api.log_stats(req.path_params.at("id")));
  });
  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string message = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      message = e.what();
    } catch (...) {
    }
    send(res, error_reply(500, "internal", message));
  });
  if (!static_dir.empty()) server.set_mount_point("/", static_dir.string());
}

bool serve(const SessionState& state, const ServiceConfig& config) {
  httplib::Server server;
  const Api api(state);
  bind_routes(server, api, config.static_dir);
  std::cerr << "listening on " << config.host << ':' << config.port << '\n';
  return server.listen(config.host, config.port);
}

}  // namespace taxonap
