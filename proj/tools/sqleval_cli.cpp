#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <thread>

#include <pthread.h>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include "sqleval/api/service.hpp"
#include "sqleval/data/scaling.hpp"
#include "sqleval/metrics/metrics.hpp"
#include "sqleval/repair/repair.hpp"
#include "sqleval/reporting/reporting.hpp"
#include "sqleval/sql/parser.hpp"
#include "sqleval/sql/taxonomy.hpp"
#include "sqleval/util/files.hpp"

using namespace sqleval;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

std::atomic<bool> g_cancel{false};
std::atomic<api::ApiServer*> g_server{nullptr};

// SIGINT/SIGTERM are blocked in every thread and consumed here. The first
// signal cancels the run or stops the server; the second exits.
void start_signal_thread() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  std::thread([set] {
    for (int count = 0;; ++count) {
      int sig = 0;
      if (sigwait(&set, &sig) != 0) continue;
      if (count > 0) std::_Exit(kExitRuntime);
      std::cerr << "interrupted; finishing in-flight work (signal again to abort)\n";
      g_cancel = true;
      if (auto* s = g_server.load()) s->stop();
    }
  }).detach();
}

struct Globals {
  std::string workdir;
  std::string data_dir;
  bool quiet = false;
};

pipeline::Workspace workspace(const Globals& g) {
  return pipeline::Workspace(g.workdir.empty() ? pipeline::default_workdir() : fs::path(g.workdir),
                             g.data_dir.empty() ? pipeline::default_data_dir() : fs::path(g.data_dir));
}

std::string read_input(const std::string& file) {
  if (file == "-") return {std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>()};
  return util::read_file(file);
}

void print(const json& j) { std::cout << j.dump(2) << "\n"; }

void stderr_sink(const pipeline::LogEvent& e) {
  std::cerr << "[" << e.level << "] " << e.event << ": " << e.message << "\n";
}

// ---- verbs ----

struct RunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string run_id;
  bool no_plots = false;
};

int cmd_run(const Globals& g, const RunArgs& a) {
  auto ws = workspace(g);
  auto cfg = pipeline::load_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  if (a.workers) cfg.concurrency = *a.workers;
  if (!a.run_id.empty()) cfg.run_id = a.run_id;
  pipeline::RunLog log;
  if (!g.quiet) log.set_sink(stderr_sink);
  pipeline::RunControl ctl;
  ctl.log = &log;
  ctl.cancel = &g_cancel;
  const auto result = pipeline::run_evaluation(cfg, ws, ctl);
  pipeline::ArtifactHook hook;
  if (!a.no_plots) {
    hook = [&](const fs::path& dir, const pipeline::RunReport& report) {
      auto versions = reporting::reports_by_version(ws.runs_dir(), report.workload_id);
      versions[report.workload_version] = report;
      reporting::write_plots(dir, report, versions);
    };
  }
  const auto dir = pipeline::persist_run(result, log, ws.runs_dir(), hook);
  json headline = json::object();
  for (const auto& m : result.report.models) {
    json scores = json::object();
    for (const auto& [metric, s] : m.metrics) scores[metrics::to_string(metric)] = s.overall.score;
    headline[m.model_id] = scores;
  }
  print({{"run_id", result.config.run_id},
         {"dir", dir.string()},
         {"workload", {{"id", result.workload.id}, {"version", result.workload.version}}},
         {"status", result.stats.interrupted ? "interrupted" : "completed"},
         {"overall", headline},
         {"stats", result.stats.to_json()}});
  return result.stats.interrupted ? kExitRuntime : kExitOk;
}

struct ClassifyArgs {
  std::string input = "-";
  std::string dialect = "sqlite";
  bool lines = false;
};

int cmd_classify(const ClassifyArgs& a) {
  const auto dialect = sql::dialect_from_string(a.dialect);
  const auto text = read_input(a.input);
  std::vector<std::string> queries;
  if (a.lines) {
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);)
      if (line.find_first_not_of(" \t\r") != std::string::npos) queries.push_back(line);
  } else {
    queries.push_back(text);
  }
  int rc = kExitOk;
  for (const auto& q : queries) {
    try {
      const auto ast = sql::parse_sql(q, dialect);
      std::cout << sql::classify(ast).to_string() << "\n";
    } catch (const ParseError& e) {
      std::cout << "error\n";
      std::cerr << "parse error: " << e.what() << "\n";
      rc = kExitUsage;
    } catch (const UnsupportedConstruct& e) {
      std::cout << "error\n";
      std::cerr << "unsupported: " << e.what() << "\n";
      rc = kExitUsage;
    }
  }
  return rc;
}

struct CompareArgs {
  std::string gen;
  std::string gt;
  std::string db;
  std::string mode = "spider_compatible";
  std::string catalog;
  int repair_depth = repair::kDefaultMaxDepth;
};

std::string sql_arg(const std::string& v) {
  // "@file" reads the query from a file.
  return !v.empty() && v[0] == '@' ? util::read_file(v.substr(1)) : v;
}

int cmd_compare(const Globals& g, const CompareArgs& a) {
  auto ws = workspace(g);
  const auto& db = ws.catalog(a.catalog).get(a.db);
  const auto gen_sql = sql_arg(a.gen);
  const auto gt_sql = sql_arg(a.gt);
  const auto mode = sql::match_mode_from_string(a.mode);
  const auto schema = db.schema.info();

  metrics::ExecOutcome gen;
  try {
    gen.table = data::execute_query(db, gen_sql);
  } catch (const Timeout& e) {
    gen.error = e.what();
    gen.timeout = true;
  } catch (const ExecError& e) {
    gen.error = e.what();
  }
  const auto gt = data::execute_query(db, gt_sql);
  const auto ea = metrics::execution_accuracy(gen, gt);
  const auto em = metrics::exact_match_outcome(gen_sql, gt_sql, mode, &schema);
  json out = {{"EA", metrics::to_json(ea)}, {"EM", metrics::to_json(em)}};
  json labels = json::object();
  for (const auto& [key, text] : {std::pair{"gen", gen_sql}, std::pair{"gt", gt_sql}}) {
    try {
      labels[key] = sql::classify(sql::parse_sql(text)).to_string();
    } catch (const Error&) {
      labels[key] = nullptr;
    }
  }
  out["labels"] = labels;
  json repairs = json::array();
  if (!ea.passed() && gen.ok())
    for (const auto& s : repair::suggest_repairs(*gen.table, gt, {}, a.repair_depth)) repairs.push_back(repair::to_json(s));
  out["repairs"] = repairs;
  print(out);
  return kExitOk;
}

struct ScaleArgs {
  std::string db;
  int factor = 10;
  std::uint64_t seed = 0;
  std::string catalog;
};

int cmd_scale(const Globals& g, const ScaleArgs& a) {
  auto ws = workspace(g);
  const auto& db = ws.catalog(a.catalog).get(a.db);
  const auto scaled = data::scale_database(db, a.factor, a.seed, ws.workdir());
  print({{"db_id", scaled.db.db_id},
         {"source", db.location},
         {"location", scaled.db.location},
         {"orphans", data::foreign_key_orphans(scaled.db)},
         {"profile", data::to_json(scaled.profile)}});
  return kExitOk;
}

struct AlignArgs {
  std::string workload;
  std::optional<int> version;
  std::string target;
  std::uint64_t seed = 0;
  bool dry_run = false;
};

int cmd_align(const Globals& g, const AlignArgs& a) {
  auto ws = workspace(g);
  const auto store = ws.store();
  const auto w = store.load(a.workload, a.version);
  const auto r = workload::align_workload(w, ws.target(a.target), a.seed);
  bool exists = true;
  try {
    store.versions(r.workload.workload_id);
  } catch (const NotFound&) {
    exists = false;
  }
  bool published = false;
  if (!a.dry_run && !exists) {
    store.publish(r.workload, {{"aligned_from", {{"id", w.workload_id}, {"version", w.version}}},
                               {"target", ws.target(a.target).to_json()}});
    published = true;
  }
  json quotas = json::object();
  for (const auto& [c, q] : r.quotas) quotas["c" + std::to_string(c)] = q;
  json ids = json::array();
  for (const auto& dp : r.workload.data_points) ids.push_back(dp.id);
  print({{"workload_id", r.workload.workload_id},
         {"n", r.n},
         {"quotas", quotas},
         {"published", published},
         {"data_points", ids}});
  return kExitOk;
}

int cmd_augment(const Globals& g, pipeline::AugmentRequest req) {
  auto ws = workspace(g);
  pipeline::RunLog log;
  if (!g.quiet) log.set_sink(stderr_sink);
  const auto out = pipeline::augment_from_run(ws, req, &log);
  json weak = json::array();
  for (const auto& l : out.weak) weak.push_back(l.subcategory_code());
  json fills = json::array();
  for (const auto& f : out.result.fills) fills.push_back(f.to_json());
  print({{"workload_id", out.result.workload.workload_id},
         {"version", out.result.workload.version},
         {"weak", weak},
         {"added_ids", out.result.added_ids},
         {"fills", fills}});
  return kExitOk;
}

struct ReportArgs {
  std::string run;
  std::string format = "json";
  bool plots = false;
  bool check = false;
};

int cmd_report(const Globals& g, const ReportArgs& a) {
  auto ws = workspace(g);
  const auto stored = pipeline::load_run(ws.runs_dir(), a.run);
  // Recomputed from config and records alone.
  const auto report = pipeline::aggregate(stored.config, stored.workload, stored.records);
  if (a.check && pipeline::report_text(report) != stored.report_text) {
    std::cerr << "recomputed report differs from " << (stored.dir / "report.json").string() << "\n";
    return kExitRuntime;
  }
  if (a.plots) {
    auto versions = reporting::reports_by_version(ws.runs_dir(), report.workload_id);
    versions[report.workload_version] = report;
    reporting::write_plots(stored.dir, report, versions);
    if (!g.quiet) std::cerr << "plots written to " << (stored.dir / "plots").string() << "\n";
  }
  std::cout << reporting::export_report(report, reporting::export_format_from_string(a.format));
  return kExitOk;
}

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8080;
};

int cmd_serve(const Globals& g, const ServeArgs& a) {
  auto ws = workspace(g);
  api::RunService service(ws);
  api::ApiServer server(service);
  const int port = server.bind(a.host, a.port);
  std::cerr << "listening on http://" << a.host << ":" << port << "\n";
  g_server = &server;
  if (!g_cancel) server.serve();
  g_server = nullptr;
  service.shutdown();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Text-to-SQL evaluation toolkit"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--workdir", g.workdir, "Working directory (default $SQLEVAL_WORKDIR or ./sqleval-work)");
  app.add_option("--data-dir", g.data_dir, "Bundled data directory (default $SQLEVAL_DATA_DIR)");
  app.add_flag("-q,--quiet", g.quiet, "Suppress progress output");

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Evaluate models on a workload and persist the run");
  run_cmd->add_option("--config", run.config, "Run configuration (JSON or YAML)")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--seed", run.seed, "Override the config seed");
  run_cmd->add_option("--workers", run.workers, "Override concurrency")->check(CLI::PositiveNumber);
  run_cmd->add_option("--run-id", run.run_id, "Explicit run id");
  run_cmd->add_flag("--no-plots", run.no_plots, "Skip plot rendering");

  ClassifyArgs classify;
  auto* classify_cmd = app.add_subcommand("classify", "Print the taxonomy label of a query");
  classify_cmd->add_option("input", classify.input, "SQL file or - for stdin");
  classify_cmd->add_option("--dialect", classify.dialect, "sqlite or mysql")->check(CLI::IsMember({"sqlite", "mysql"}));
  classify_cmd->add_flag("--lines", classify.lines, "One query per line");

  CompareArgs compare;
  auto* compare_cmd = app.add_subcommand("compare", "Compare a generated query against ground truth");
  compare_cmd->add_option("--gen", compare.gen, "Generated SQL, or @file")->required();
  compare_cmd->add_option("--gt", compare.gt, "Ground-truth SQL, or @file")->required();
  compare_cmd->add_option("--db", compare.db, "Database id from the catalog")->required();
  compare_cmd->add_option("--mode", compare.mode, "Exact-match mode")
      ->check(CLI::IsMember({"spider", "spider_compatible", "strict"}));
  compare_cmd->add_option("--catalog", compare.catalog, "Catalog file");
  compare_cmd->add_option("--repair-depth", compare.repair_depth)->check(CLI::Range(0, 4));

  ScaleArgs scale;
  auto* scale_cmd = app.add_subcommand("scale", "Write a scaled copy of a database");
  scale_cmd->add_option("--db", scale.db)->required();
  scale_cmd->add_option("--factor", scale.factor)->required()->check(CLI::PositiveNumber);
  scale_cmd->add_option("--seed", scale.seed);
  scale_cmd->add_option("--catalog", scale.catalog, "Catalog file");

  AlignArgs align;
  auto* align_cmd = app.add_subcommand("align", "Select the largest subset matching a category distribution");
  align_cmd->add_option("--workload", align.workload)->required();
  align_cmd->add_option("--version", align.version);
  align_cmd->add_option("--target", align.target, "Target file or bundled target name")->required();
  align_cmd->add_option("--seed", align.seed);
  align_cmd->add_flag("--dry-run", align.dry_run, "Do not publish the aligned workload");

  pipeline::AugmentRequest augment;
  auto* augment_cmd = app.add_subcommand("augment", "Add data points for weak subcategories of a run");
  augment_cmd->add_option("--run", augment.run_id)->required();
  augment_cmd->add_option("--threshold", augment.threshold)->required()->check(CLI::Range(0.0, 1.0));
  augment_cmd->add_option("--per-subcat", augment.per_subcategory)->required()->check(CLI::PositiveNumber);
  augment_cmd->add_option("--model", augment.model, "Restrict weakness to one model");
  augment_cmd->add_option("--generator", augment.generator, "Candidate generator adapter kind");

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "Recompute and export a run report");
  report_cmd->add_option("--run", report.run)->required();
  report_cmd->add_option("--format", report.format)->check(CLI::IsMember({"json", "csv"}));
  report_cmd->add_flag("--plots", report.plots, "Re-render plots into the run directory");
  report_cmd->add_flag("--check", report.check, "Fail when the recomputed report differs from report.json");

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP API");
  serve_cmd->add_option("--host", serve.host);
  serve_cmd->add_option("--port", serve.port)->check(CLI::Range(0, 65535));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  start_signal_thread();
  try {
    if (*run_cmd) return cmd_run(g, run);
    if (*classify_cmd) return cmd_classify(classify);
    if (*compare_cmd) return cmd_compare(g, compare);
    if (*scale_cmd) return cmd_scale(g, scale);
    if (*align_cmd) return cmd_align(g, align);
    if (*augment_cmd) return cmd_augment(g, augment);
    if (*report_cmd) return cmd_report(g, report);
    if (*serve_cmd) return cmd_serve(g, serve);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InfeasibleAlignment& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NotFound& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
