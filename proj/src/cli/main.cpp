// taxonap command-line entry point.
//
// Exit codes: 0 ok, 1 usage error, 2 data error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "taxonap/errors.hpp"
#include "taxonap/evaluation.hpp"
#include "taxonap/eventlog.hpp"
#include "taxonap/icd10.hpp"
#include "taxonap/parallel.hpp"
#include "taxonap/predictor.hpp"
#include "taxonap/service.hpp"
#include "taxonap/similarity.hpp"
#include "taxonap/synthetic.hpp"
#include "text_util.hpp"

namespace fs = std::filesystem;
using namespace taxonap;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << content;
}

// "I214:1,I10:2" -> diagnoses; a code without ":seq" takes its list
// position.
std::vector<Diagnosis> parse_diagnosis_flag(const std::string& text) {
  std::vector<Diagnosis> out;
  for (auto item : detail::split(text, ',')) {
    item = detail::trim(item);
    if (item.empty()) continue;
    const auto colon = item.find(':');
    Diagnosis d{std::string(detail::trim(item.substr(0, colon))), static_cast<int>(out.size()) + 1};
    if (colon != std::string_view::npos) {
      const auto seq = detail::parse_int<int>(item.substr(colon + 1));
      if (!seq || *seq < 1) throw InvalidArgument("bad diagnosis entry '" + std::string(item) + "'");
      d.seq = *seq;
    }
    out.push_back(std::move(d));
  }
  std::sort(out.begin(), out.end(), [](const Diagnosis& a, const Diagnosis& b) { return a.seq < b.seq; });
  return out;
}

std::vector<std::string> parse_code_list(const std::string& text) {
  std::vector<std::string> out;
  for (auto item : detail::split(text, ',')) {
    item = detail::trim(item);
    if (!item.empty()) out.emplace_back(item);
  }
  return out;
}

struct TaxonomyFlags {
  std::string cm;
  std::string pcs;
  std::string blocks;
};

void add_taxonomy_flags(CLI::App* cmd, TaxonomyFlags& flags) {
  cmd->add_option("--tax-cm", flags.cm, "Diagnosis taxonomy (CMS order file or child/parent TSV)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--tax-pcs", flags.pcs, "Procedure taxonomy (CMS order file or child/parent TSV)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--blocks", flags.blocks, "ICD-10-CM chapter/block TSV")->check(CLI::ExistingFile);
}

struct LoadedWorld {
  std::unique_ptr<Taxonomy> diagnoses;
  std::unique_ptr<Taxonomy> procedures;
  EventLog log;
};

LoadedWorld load_world(const std::string& log_path, const TaxonomyFlags& flags) {
  if (flags.cm.empty() || flags.pcs.empty()) throw CLI::ValidationError("--tax-cm and --tax-pcs are required");
  LoadedWorld w;
  w.log = load_event_log(log_path);
  const auto cm_format = guess_taxonomy_format(flags.cm, "icd10cm");
  const auto pcs_format = guess_taxonomy_format(flags.pcs, "icd10pcs");
  w.diagnoses = std::make_unique<Taxonomy>(load_taxonomy(w.log.diagnosis_taxonomy, cm_format, flags.cm, flags.blocks));
  w.procedures = std::make_unique<Taxonomy>(load_taxonomy(w.log.procedure_taxonomy, pcs_format, flags.pcs));
  return w;
}

std::string fixed(double v, int digits = 6) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// ---------------------------------------------------------------------------

struct IngestArgs {
  std::string diagnoses, procedures, out;
  std::size_t min_cases = 500;
  std::size_t max_diagnoses = 10;
  TaxonomyFlags tax;
  bool strict_codes = false;
};

int run_ingest(const IngestArgs& a) {
  const auto dx = read_diagnoses_csv(read_text_file(a.diagnoses));
  const auto px = read_procedures_csv(read_text_file(a.procedures));
  BuildOptions opts;
  opts.min_cases = a.min_cases;
  opts.max_diagnoses = a.max_diagnoses;
  std::unique_ptr<Taxonomy> cm, pcs;
  if (!a.tax.cm.empty()) {
    cm = std::make_unique<Taxonomy>(
        load_taxonomy(opts.diagnosis_taxonomy, guess_taxonomy_format(a.tax.cm, "icd10cm"), a.tax.cm, a.tax.blocks));
    opts.diagnosis_codes = cm.get();
  }
  if (!a.tax.pcs.empty()) {
    pcs = std::make_unique<Taxonomy>(
        load_taxonomy(opts.procedure_taxonomy, guess_taxonomy_format(a.tax.pcs, "icd10pcs"), a.tax.pcs));
    opts.procedure_codes = pcs.get();
  }
  opts.unknown_codes = a.strict_codes ? UnknownCodePolicy::kFail : UnknownCodePolicy::kDrop;
  const auto result = build_logs(dx, px, opts);
  const auto& s = result.summary;
  for (const auto& w : s.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "input_cases " << s.input_cases << '\n'
            << "dropped_no_procedures " << s.dropped_no_procedures << '\n'
            << "dropped_missing_primary " << s.dropped_missing_primary << '\n'
            << "dropped_unknown_code_records " << s.dropped_unknown_code_records << '\n'
            << "truncated_diagnoses " << s.truncated_diagnoses << '\n';
  for (const auto& c : s.categories) {
    std::cout << "category " << c.category << " cases " << c.cases << ' ' << (c.kept ? "kept" : "dropped") << '\n';
  }
  if (result.logs.empty()) std::cerr << "warning: no category reached --min-cases " << a.min_cases << '\n';
  for (const auto& [id, log] : result.logs) write_file(fs::path(a.out) / (id + ".json"), to_json(log));
  std::cout << "wrote " << result.logs.size() << " log(s) to " << a.out << '\n';
  return 0;
}

int run_stats(const std::string& log_path, bool as_json) {
  const auto log = load_event_log(log_path);
  const auto s = stats(log);
  if (as_json) {
    std::cout << "{\"log_id\":\"" << log.id << "\",\"n_traces\":" << s.n_traces
              << ",\"n_trace_variants\":" << s.n_trace_variants << ",\"n_unique_events\":" << s.n_unique_events
              << ",\"n_unique_diagnoses\":" << s.n_unique_diagnoses
              << ",\"mean_trace_length\":" << detail::format_real(s.mean_trace_length)
              << ",\"std_trace_length\":" << detail::format_real(s.std_trace_length) << "}\n";
    return 0;
  }
  std::cout << "log_id             " << log.id << '\n'
            << "n_traces           " << s.n_traces << '\n'
            << "n_trace_variants   " << s.n_trace_variants << '\n'
            << "n_unique_events    " << s.n_unique_events << '\n'
            << "n_unique_diagnoses " << s.n_unique_diagnoses << '\n'
            << "mean_trace_length  " << fixed(s.mean_trace_length, 4) << '\n'
            << "std_trace_length   " << fixed(s.std_trace_length, 4) << '\n';
  return 0;
}

struct PredictArgs {
  std::string log;
  TaxonomyFlags tax;
  std::string diagnoses;
  std::string events;
  std::size_t n = 5;
  std::string variant = "T";
  std::string mode = "score_sum";
  std::size_t supporters = 3;
};

int run_predict(const PredictArgs& a) {
  const auto w = load_world(a.log, a.tax);
  TraceQuery q;
  q.diagnoses = parse_diagnosis_flag(a.diagnoses);
  q.events = parse_code_list(a.events);
  if (q.diagnoses.empty()) throw CLI::ValidationError("--diagnoses needs at least one code");
  for (const auto& d : q.diagnoses) w.diagnoses->at(d.code);
  for (const auto& e : q.events) w.procedures->at(e);

  const auto variant = parse_variant(a.variant);
  PredictorOptions opts;
  opts.n = a.n;
  opts.mode = parse_ranking_mode(a.mode);
  const TraceSimilarity sim(*w.diagnoses, *w.procedures,
                            variant == Variant::kT ? SimilarityConfig::taxonomic() : SimilarityConfig::boolean());
  const auto result = predict(q, w.log, sim, opts);

  std::cout << "# log " << w.log.id << "  variant " << to_string(variant) << "  mode " << to_string(result.mode)
            << "  pool " << result.pool_size << "  query " << result.query_fingerprint << '\n';
  std::cout << "rank\tcode\tscore\tsupporters\tdescription\n";
  for (std::size_t r = 0; r < result.candidates.size(); ++r) {
    const auto& c = result.candidates[r];
    std::string ids;
    for (std::size_t k = 0; k < std::min(a.supporters, c.supporters.size()); ++k) {
      ids += (k ? ";" : "") + c.supporters[k].case_id;
    }
    if (c.supporters.size() > a.supporters) ids += ";+" + std::to_string(c.supporters.size() - a.supporters);
    const auto node = w.procedures->find(c.activity);
    const std::string desc = node ? w.procedures->description(*node) : std::string();
    std::cout << r + 1 << '\t' << c.activity << '\t' << fixed(c.score) << '\t' << ids << '\t' << desc << '\n';
  }
  return 0;
}

struct EvaluateArgs {
  std::string log;
  TaxonomyFlags tax;
  std::optional<std::size_t> synthetic;
  SyntheticOptions synth;
  std::size_t n = 5;
  std::string mode = "score_sum";
  std::string out = "report.csv";
  std::string records;
  std::string variant_only;
  bool per_trace = false;
  bool welch = false;
};

int run_evaluate(const EvaluateArgs& a) {
  LoadedWorld w;
  if (a.synthetic) {
    auto opts = a.synth;
    opts.cases = *a.synthetic;
    auto world = make_synthetic(opts);
    w.diagnoses = std::move(world.diagnoses);
    w.procedures = std::move(world.procedures);
    w.log = std::move(world.log);
  } else {
    if (a.log.empty()) throw CLI::ValidationError("evaluate needs --log or --synthetic");
    w = load_world(a.log, a.tax);
  }
  EvalOptions opts;
  opts.n = a.n;
  opts.mode = parse_ranking_mode(a.mode);
  if (!a.variant_only.empty()) {
    if (parse_variant(a.variant_only) == Variant::kB) opts.config_t = SimilarityConfig::boolean();
    opts.run_b = false;
  }
  const auto loo = loo_evaluate(w.log, *w.diagnoses, *w.procedures, opts);
  const auto report =
      make_report(w.log, loo, a.n, a.per_trace, a.welch ? TestKind::kWelch : TestKind::kPaired);

  const fs::path out(a.out);
  const fs::path stem = out.parent_path() / out.stem();
  write_file(out, log_table_csv(report));
  write_file(stem.string() + "_prefix.csv", prefix_table_csv(report));
  write_file(stem.string() + ".json", report_json(report));
  if (!a.records.empty()) {
    auto all = loo.records_t;
    all.insert(all.end(), loo.records_b.begin(), loo.records_b.end());
    write_file(a.records, records_csv(all));
  }

  const auto& r = report.log;
  const std::string t_label = a.variant_only.empty() ? "T" : a.variant_only;
  std::cout << "log " << r.log_id << "  traces " << r.stats.n_traces << "  instances " << loo.records_t.size()
            << "  n " << a.n << '\n';
  std::cout << "avg_sim_" << t_label << ' ' << fixed(r.avg_sim_t) << '\n';
  if (r.avg_sim_b) std::cout << "avg_sim_B " << fixed(*r.avg_sim_b) << '\n';
  if (r.p_value) std::cout << "p_value " << detail::format_real(*r.p_value) << '\n';
  std::cout << "wrote " << out.string() << ", " << stem.string() << "_prefix.csv, " << stem.string() << ".json\n";
  return 0;
}

struct SynthArgs {
  SyntheticOptions opts;
  std::string out = "synthetic";
};

int run_synth(const SynthArgs& a) {
  const auto world = make_synthetic(a.opts);
  const fs::path dir(a.out);
  const std::string log_file = world.log.id + ".json";
  write_file(dir / log_file, to_json(world.log));
  write_file(dir / "diagnoses.tsv", to_tsv(*world.diagnoses));
  write_file(dir / "procedures.tsv", to_tsv(*world.procedures));
  std::string conf;
  conf += "# generated by taxonap synth\n";
  conf += "port = 8080\n";
  conf += std::string("taxonomy.") + kSyntheticDiagnosisId + ".format = tsv\n";
  conf += std::string("taxonomy.") + kSyntheticDiagnosisId + ".path = diagnoses.tsv\n";
  conf += std::string("taxonomy.") + kSyntheticProcedureId + ".format = tsv\n";
  conf += std::string("taxonomy.") + kSyntheticProcedureId + ".path = procedures.tsv\n";
  conf += "log = " + log_file + "\n";
  write_file(dir / "service.conf", conf);
  std::cout << "wrote " << world.log.cases.size() << " cases to " << (dir / log_file).string() << '\n';
  return 0;
}

struct ServeArgs {
  std::string config;
  std::optional<int> port;
  std::optional<std::string> host;
};

int run_serve(const ServeArgs& a, std::size_t threads) {
  auto cfg = load_service_config(a.config);
  apply_env_overrides(cfg);
  if (a.port) cfg.port = *a.port;
  if (a.host) cfg.host = *a.host;
  if (threads) cfg.threads = threads;
  const auto state = load_session(cfg);
  std::cerr << "loaded " << state.taxonomies.size() << " taxonomies, " << state.logs.size() << " logs\n";
  if (!serve(state, cfg)) {
    std::cerr << "error: cannot listen on " << cfg.host << ':' << cfg.port << '\n';
    return kExitData;
  }
  return 0;
}

void add_synthetic_flags(CLI::App* cmd, SyntheticOptions& o) {
  cmd->add_option("--seed", o.seed, "Generator seed");
  cmd->add_option("--near-miss", o.near_miss, "Probability of a sibling instead of the canonical code")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--pathways", o.pathways, "Pathway templates")->check(CLI::Range(1, 10));
  cmd->add_option("--fanout", o.leaf_fanout, "Leaves per group")->check(CLI::Range(2, 26));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Next-activity prediction from taxonomy-based trace similarity"};
  app.require_subcommand(1);
  std::size_t threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = hardware concurrency)");

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Build per-category event logs from CSV extracts");
  c_ingest->add_option("--diagnoses", ingest.diagnoses, "case_id,code,seq_num CSV")->required()->check(CLI::ExistingFile);
  c_ingest->add_option("--procedures", ingest.procedures, "case_id,code,timestamp,seq_num CSV")
      ->required()
      ->check(CLI::ExistingFile);
  c_ingest->add_option("--out", ingest.out, "Output directory")->required();
  c_ingest->add_option("--min-cases", ingest.min_cases, "Minimum cases per category");
  c_ingest->add_option("--max-diagnoses", ingest.max_diagnoses, "Diagnoses kept per case");
  c_ingest->add_flag("--strict-codes", ingest.strict_codes, "Fail on codes missing from the taxonomies");
  add_taxonomy_flags(c_ingest, ingest.tax);

  std::string stats_log;
  bool stats_json = false;
  auto* c_stats = app.add_subcommand("stats", "Descriptive statistics of an event log");
  c_stats->add_option("--log", stats_log, "Event log JSON")->required()->check(CLI::ExistingFile);
  c_stats->add_flag("--json", stats_json, "Print JSON");

  PredictArgs pred;
  auto* c_pred = app.add_subcommand("predict", "Rank next-activity candidates for one query");
  c_pred->add_option("--log", pred.log, "Event log JSON")->required()->check(CLI::ExistingFile);
  add_taxonomy_flags(c_pred, pred.tax);
  c_pred->add_option("--diagnoses", pred.diagnoses, "CODE:SEQ list, comma separated")->required();
  c_pred->add_option("--events", pred.events, "Observed procedure codes, comma separated");
  c_pred->add_option("-n", pred.n, "Number of candidates")->check(CLI::PositiveNumber);
  c_pred->add_option("--variant", pred.variant, "T (taxonomic) or B (boolean)")->check(CLI::IsMember({"T", "B"}));
  c_pred->add_option("--mode", pred.mode, "score_sum or dedup_first")
      ->check(CLI::IsMember({"score_sum", "dedup_first"}));
  c_pred->add_option("--supporters", pred.supporters, "Supporter ids shown per row");

  EvaluateArgs eval;
  auto* c_eval = app.add_subcommand("evaluate", "Leave-one-out evaluation of both variants");
  auto* eval_log = c_eval->add_option("--log", eval.log, "Event log JSON")->check(CLI::ExistingFile);
  add_taxonomy_flags(c_eval, eval.tax);
  auto* eval_synth = c_eval->add_option("--synthetic", eval.synthetic, "Evaluate a generated log with N cases")
                         ->check(CLI::Range(2, 100000));
  eval_log->excludes(eval_synth);
  add_synthetic_flags(c_eval, eval.synth);
  c_eval->add_option("-n", eval.n, "Number of candidates")->check(CLI::PositiveNumber);
  c_eval->add_option("--mode", eval.mode, "score_sum or dedup_first")
      ->check(CLI::IsMember({"score_sum", "dedup_first"}));
  c_eval->add_option("--out", eval.out, "Per-log CSV; _prefix.csv and .json are written beside it");
  c_eval->add_option("--records", eval.records, "Per-instance CSV");
  c_eval->add_option("--variant-only", eval.variant_only, "Run a single variant")->check(CLI::IsMember({"T", "B"}));
  c_eval->add_flag("--per-trace", eval.per_trace, "Average per trace instead of per prefix instance");
  c_eval->add_flag("--welch", eval.welch, "Unpaired Welch test instead of the paired test");

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Write a synthetic log, its taxonomies and a service config");
  c_synth->add_option("--cases", synth.opts.cases, "Number of cases")->check(CLI::Range(2, 100000));
  add_synthetic_flags(c_synth, synth.opts);
  c_synth->add_option("--out", synth.out, "Output directory");

  ServeArgs serve_args;
  auto* c_serve = app.add_subcommand("serve", "Run the HTTP API");
  c_serve->add_option("--config", serve_args.config, "Service config file")->required()->check(CLI::ExistingFile);
  c_serve->add_option("--port", serve_args.port, "Port (overrides config and TAXONAP_PORT)");
  c_serve->add_option("--host", serve_args.host, "Host (overrides config and TAXONAP_HOST)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  set_default_threads(threads);

  try {
    if (*c_ingest) return run_ingest(ingest);
    if (*c_stats) return run_stats(stats_log, stats_json);
    if (*c_pred) return run_predict(pred);
    if (*c_eval) return run_evaluate(eval);
    if (*c_synth) return run_synth(synth);
    if (*c_serve) return run_serve(serve_args, threads);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error [" << e.kind() << "]: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
