// Command-line front end: curation, splitting, calibration, analysis,
// replay, resolution estimation, reporting and the HTTP service.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>

#include "bpcheck/backend.hpp"
#include "bpcheck/calibration.hpp"
#include "bpcheck/corpus.hpp"
#include "bpcheck/errors.hpp"
#include "bpcheck/pipeline.hpp"
#include "bpcheck/replay.hpp"
#include "bpcheck/serialization.hpp"
#include "bpcheck/service.hpp"

namespace fs = std::filesystem;
using namespace bpcheck;

namespace {

struct GlobalOptions {
  std::string config_dir;
  std::string backend = "reference";
  std::string strategy;
  std::size_t beam_width = 4;
  std::string prompts;
  std::string thresholds;
  std::string rules;
  std::string summaries;
  std::string out;
  std::size_t budget = kDefaultInputBudget;
};

class CliError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError("cannot read " + path);
  return in;
}

// Writes to --out when given, else stdout.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary | std::ios::trunc);
      if (!file_) throw CliError("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }
  bool to_stdout() const { return !file_.is_open(); }

 private:
  std::ofstream file_;
};

template <typename T>
std::vector<T> read_jsonl(const std::string& path) {
  auto in = open_input(path);
  std::vector<T> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line).get<T>());
    } catch (const std::exception& e) {
      throw CliError(path + " line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::optional<fs::path> config_dir(const GlobalOptions& g) {
  if (!g.config_dir.empty()) return fs::path(g.config_dir);
  if (const char* env = std::getenv("BPCHECK_CONFIG_DIR"); env != nullptr && *env != '\0') {
    return fs::path(env);
  }
  return std::nullopt;
}

ConfigSources sources_for(const GlobalOptions& g, Strategy surface_default) {
  ConfigSources s;
  if (!g.prompts.empty()) s.prompts = g.prompts;
  if (!g.thresholds.empty()) s.thresholds = g.thresholds;
  if (!g.rules.empty()) s.rules = g.rules;
  if (!g.summaries.empty()) s.summaries = g.summaries;
  if (const auto dir = config_dir(g)) s.fill_from_directory(*dir);
  s.budget = g.budget;
  s.decode.strategy = g.strategy.empty() ? surface_default : strategy_from_string(g.strategy);
  s.decode.beam_width = g.beam_width;
  return s;
}

std::shared_ptr<const Backend> make_backend(const GlobalOptions& g) {
  if (g.backend == "reference") return std::make_shared<ReferenceBackend>();
  if (g.backend.starts_with("remote:")) {
    RemoteOptions opts;
    opts.base_url = g.backend.substr(7);
    return std::make_shared<RemoteBackend>(opts);
  }
  throw CliError("unknown backend '" + g.backend + "' (expected reference or remote:URL)");
}

std::string fmt_opt(const std::optional<double>& v, int precision = 4) {
  if (!v) return "undef";
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << *v;
  return s.str();
}

std::vector<std::string> allowlist_for(const GlobalOptions& g, const std::string& flag) {
  std::string path = flag;
  if (path.empty()) {
    if (const auto dir = config_dir(g); dir && fs::exists(*dir / "allowlist.txt")) {
      path = (*dir / "allowlist.txt").string();
    }
  }
  if (path.empty()) throw CliError("no URL allowlist given (--allowlist or allowlist.txt in --config)");
  auto in = open_input(path);
  auto list = load_allowlist(in);
  if (list.empty()) throw CliError("URL allowlist " + path + " is empty");
  return list;
}

// ---- subcommands -----------------------------------------------------------

int run_curate(const GlobalOptions& g, const std::string& archive_path, const std::string& allowlist_path) {
  const auto allowlist = allowlist_for(g, allowlist_path);
  const auto sources = sources_for(g, Strategy::greedy);
  const auto config = load_pipeline_config(sources);

  SkipReport skips;
  auto in = open_input(archive_path);
  const auto records = read_archive(in, skips);
  const auto relevant = extract_relevant_comments(records, allowlist, skips);

  Output out(g.out);
  std::size_t written = 0;
  for (const auto& rc : relevant) {
    auto result = curate_example(rc, config.prompts, config.budget);
    if (auto* skip = std::get_if<CurationSkip>(&result)) {
      skips.add(skip->reason);
      continue;
    }
    out.stream() << json(std::get<TrainingExample>(result)).dump() << '\n';
    ++written;
  }
  std::cerr << "curated " << written << " examples from " << relevant.size() << " relevant comments\n";
  for (const auto& [reason, n] : skips.counts()) std::cerr << "  skipped " << n << ": " << reason << '\n';
  for (const auto& [per_file, files] : comment_multiplicity(relevant)) {
    std::cerr << "  files with " << per_file << " relevant comment(s): " << files << '\n';
  }
  return 0;
}

int run_split(const std::string& examples_path, Timestamp cut1, Timestamp cut2, const std::string& out_dir) {
  const auto examples = read_jsonl<TrainingExample>(examples_path);
  const auto split = temporal_split(examples, cut1, cut2);
  fs::create_directories(out_dir);
  const auto write = [&](const char* name, const std::vector<TrainingExample>& part) {
    std::ofstream f(fs::path(out_dir) / name, std::ios::binary | std::ios::trunc);
    if (!f) throw CliError("cannot write " + (fs::path(out_dir) / name).string());
    for (const auto& ex : part) f << json(ex).dump() << '\n';
  };
  write("train.jsonl", split.train);
  write("validation.jsonl", split.validation);
  write("test.jsonl", split.test);
  std::cout << "train " << split.train.size() << "  validation " << split.validation.size() << "  test "
            << split.test.size() << '\n';
  return 0;
}

struct CalibrateArgs {
  std::string cases;
  double target_precision = 0.9;
  std::size_t min_support = 5;
  std::size_t tolerance = 0;
  std::vector<std::string> runs;
  double reference_t = kDefaultThreshold;
  std::string curve_out;
};

int run_calibrate(const GlobalOptions& g, const CalibrateArgs& a) {
  auto in = open_input(a.cases);
  const auto cases = read_eval_cases(in);
  if (cases.empty()) throw CliError("no evaluation cases");

  CalibrationConfig cfg;
  cfg.target_precision = a.target_precision;
  cfg.min_support = a.min_support;
  cfg.tolerance = a.tolerance;
  const auto [table, report] = fit_per_url_thresholds(cases, cfg);

  Output out(g.out);
  write_threshold_table(out.stream(), table);
  std::ostream& log = out.to_stdout() ? std::cerr : std::cout;

  log << "# recall denominator: total expected comments; matching tolerance " << a.tolerance
      << " bytes\n# ground truth is incomplete (missing references, selective commenting, varied expertise)\n";
  log << "default_t " << report.default_t << "  precision " << fmt_opt(report.default_precision) << '\n';
  log << std::left << std::setw(64) << "url" << std::setw(9) << "support" << std::setw(10) << "t"
      << std::setw(10) << "precision" << "action\n";
  for (const auto& u : report.urls) {
    log << std::left << std::setw(64) << u.url << std::setw(9) << u.support << std::setw(10)
        << fmt_opt(u.threshold, 2) << std::setw(10) << fmt_opt(u.precision)
        << (u.suppress_recommended ? "suppress" : (u.threshold ? "per-url" : "default")) << '\n';
  }

  if (!a.curve_out.empty()) {
    std::ofstream curve(a.curve_out, std::ios::binary | std::ios::trunc);
    if (!curve) throw CliError("cannot write " + a.curve_out);
    for (const auto& p : pr_curve(cases, cfg.threshold_grid, a.tolerance)) curve << json(p).dump() << '\n';
  }

  if (!a.runs.empty()) {
    std::vector<std::pair<std::string, std::vector<EvalCase>>> runs;
    for (const auto& entry : a.runs) {
      const auto eq = entry.find('=');
      if (eq == std::string::npos) throw CliError("--run expects LABEL=FILE, got " + entry);
      auto run_in = open_input(entry.substr(eq + 1));
      runs.emplace_back(entry.substr(0, eq), read_eval_cases(run_in));
    }
    log << "\nrun ranking at t=" << a.reference_t << '\n';
    std::size_t rank = 0;
    for (const auto& r : compare_runs(runs, a.reference_t)) {
      log << ++rank << ". " << r.label << "  precision " << fmt_opt(r.precision) << "  recall "
          << fmt_opt(r.recall) << '\n';
    }
  }
  return 0;
}

int run_analyze(const GlobalOptions& g, const std::vector<std::string>& files, const std::string& language,
                const std::string& diff_path, bool as_json) {
  if (files.empty()) throw CliError("analyze needs at least one --file");
  const auto store = std::make_shared<ConfigStore>(sources_for(g, Strategy::beam));
  const AnalysisService service(store, make_backend(g));

  AnalyzeRequest req;
  for (const auto& path : files) {
    std::string lang = language;
    if (lang.empty()) {
      const auto guessed = language_from_path(path);
      if (!guessed) throw CliError("cannot infer language of " + path + "; pass --language");
      lang = std::string(to_string(*guessed));
    }
    req.files.push_back({path, lang, read_file(path)});
  }
  if (!diff_path.empty()) req.diff = read_file(diff_path);

  const auto response = service.handle_analyze(req);
  Output out(g.out);
  if (as_json) {
    out.stream() << analyze_response_json(response) << '\n';
  } else {
    for (const auto& c : response.comments) {
      out.stream() << c.path << ':' << c.start.line << ':' << c.start.col << ": " << c.url << " ("
                   << std::fixed << std::setprecision(2) << c.score << ") " << c.summary << '\n';
    }
  }
  for (const auto& e : response.errors) std::cerr << e.path << ": " << e.kind << " error: " << e.message << '\n';
  return response.errors.empty() ? 0 : 1;
}

void print_distribution(std::ostream& os, const std::map<std::string, std::size_t>& histogram) {
  os << std::left << std::setw(6) << "rank" << std::setw(64) << "url" << std::setw(8) << "count"
     << std::setw(9) << "share" << "cumulative_share\n";
  for (const auto& row : url_distribution(histogram)) {
    os << std::left << std::setw(6) << row.rank << std::setw(64) << row.url << std::setw(8) << row.count
       << std::setw(9) << fmt_opt(row.share) << fmt_opt(row.cumulative_share) << '\n';
  }
}

int run_replay(const GlobalOptions& g, const std::string& corpus, const std::string& results_path) {
  const auto reviews = read_jsonl<ReviewFile>(corpus);
  const auto config = load_pipeline_config(sources_for(g, Strategy::beam));
  const auto backend = make_backend(g);
  std::unique_ptr<ResultsLog> log;
  if (!results_path.empty()) log = std::make_unique<ResultsLog>(results_path);
  const auto report = replay_reviews(reviews, config, *backend, log.get());

  Output out(g.out);
  out.stream() << json(report).dump() << '\n';
  std::ostream& os = out.to_stdout() ? std::cerr : std::cout;
  os << "files " << report.files_total << "  changed " << report.files_changed << "  with comments "
     << report.files_with_comments << "  (" << fmt_opt(report.file_posting_frequency()) << ")\n"
     << "reviews " << report.reviews_total << "  with comments " << report.reviews_with_comments << "  ("
     << fmt_opt(report.review_posting_frequency()) << ")\n"
     << "comments " << report.comments_total << "  backend errors " << report.backend_errors
     << "  input errors " << report.input_errors << '\n';
  print_distribution(os, report.url_histogram);
  return 0;
}

int run_resolution(const GlobalOptions& g, const std::string& pairs_path, double factor, bool anywhere) {
  const auto pairs = read_jsonl<SnapshotPair>(pairs_path);
  const auto config = load_pipeline_config(sources_for(g, Strategy::beam));
  const auto backend = make_backend(g);
  ResolutionOptions opts;
  opts.manual_confirmation_factor = factor;
  opts.match_anywhere = anywhere;
  const auto report = estimate_resolution(pairs, config, *backend, opts);

  Output out(g.out);
  out.stream() << json(report).dump() << '\n';
  std::ostream& os = out.to_stdout() ? std::cerr : std::cout;
  os << "pairs " << report.pairs_total << " (skipped " << report.pairs_skipped << ")  comments "
     << report.comments_examined << "  absent on merged " << report.comment_absent_on_merged
     << "  resolution estimate " << fmt_opt(report.resolution_rate_estimate) << "  mapping "
     << report.mapping_method << '\n';
  return 0;
}

int run_report(const GlobalOptions& g, const std::string& results_path, const std::string& feedback_path,
               const std::string& human_path, const std::string& allowlist_path) {
  if (results_path.empty() && feedback_path.empty()) {
    throw CliError("report needs --results-log and/or --feedback-log");
  }
  Output out(g.out);
  std::set<std::string> auto_urls;
  if (!results_path.empty()) {
    std::map<std::string, std::size_t> histogram;
    for (const auto& r : ResultsLog(results_path).read_all()) {
      ++histogram[r.url];
      auto_urls.insert(r.url);
    }
    out.stream() << "url distribution\n";
    print_distribution(out.stream(), histogram);
  }
  if (!feedback_path.empty()) {
    const auto events = FeedbackLog(feedback_path).read_all();
    out.stream() << "feedback events " << events.size() << "  useful ratio "
                 << fmt_opt(useful_ratio(events)) << '\n';
  }
  if (!human_path.empty()) {
    if (results_path.empty()) throw CliError("--human needs --results-log for the automated URL set");
    SkipReport skips;
    auto in = open_input(human_path);
    const auto relevant = extract_relevant_comments(read_archive(in, skips), allowlist_for(g, allowlist_path), skips);
    out.stream() << "human comments " << relevant.size() << "  coverage by automated URLs "
                 << fmt_opt(human_coverage(auto_urls, relevant)) << '\n';
  }
  return 0;
}

int run_serve(const GlobalOptions& g, const std::string& host, int port, const std::string& feedback_path) {
  const auto store = std::make_shared<ConfigStore>(sources_for(g, Strategy::greedy));
  std::shared_ptr<FeedbackLog> feedback;
  if (!feedback_path.empty()) feedback = std::make_shared<FeedbackLog>(feedback_path);
  const AnalysisService service(store, make_backend(g), feedback);

  httplib::Server server;
  install_routes(server, service);
  const int bound = port == 0 ? server.bind_to_any_port(host) : (server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw CliError("cannot bind " + host + ":" + std::to_string(port));
  std::cerr << "listening on " << host << ':' << bound << " (backend " << service.backend().identity()
            << ", config " << store->fingerprint() << ")\n";
  return server.listen_after_bind() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Best-practice review assistant: curation, calibration, analysis and replay"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  GlobalOptions g;
  app.add_option("--config", g.config_dir, "Config directory (default: $BPCHECK_CONFIG_DIR)");
  app.add_option("--backend", g.backend, "reference | remote:URL");
  app.add_option("--strategy", g.strategy, "greedy | beam (default depends on the subcommand)")
      ->check(CLI::IsMember({"greedy", "beam"}));
  app.add_option("--beam-width", g.beam_width, "Beam width")->check(CLI::PositiveNumber);
  app.add_option("--prompts", g.prompts, "Prompt table (language<TAB>prompt)");
  app.add_option("--thresholds", g.thresholds, "Threshold table");
  app.add_option("--rules", g.rules, "Suppression rules (JSON lines)");
  app.add_option("--summaries", g.summaries, "URL summaries (JSON lines)");
  app.add_option("--out", g.out, "Output file (default: stdout)");
  app.add_option("--budget", g.budget, "Model input budget in bytes")->check(CLI::PositiveNumber);

  std::string archive, allowlist;
  auto* curate = app.add_subcommand("curate", "Review archive -> training examples");
  curate->add_option("--archive", archive, "Archive (JSON lines)")->required();
  curate->add_option("--allowlist", allowlist, "Best-practice URL prefixes");

  std::string examples, out_dir = ".";
  Timestamp cut1 = 0, cut2 = 0;
  auto* split = app.add_subcommand("split", "Temporal train/validation/test split");
  split->add_option("--examples", examples)->required();
  split->add_option("--cut1", cut1, "First validation timestamp")->required();
  split->add_option("--cut2", cut2, "First test timestamp")->required();
  split->add_option("--out-dir", out_dir);

  CalibrateArgs cal;
  auto* calibrate = app.add_subcommand("calibrate", "Evaluation cases -> per-URL thresholds");
  calibrate->add_option("--cases", cal.cases, "Evaluation cases (JSON lines)")->required();
  calibrate->add_option("--target-precision", cal.target_precision)->check(CLI::Range(0.0, 1.0));
  calibrate->add_option("--min-support", cal.min_support)->check(CLI::PositiveNumber);
  calibrate->add_option("--tolerance", cal.tolerance, "Offset match tolerance in bytes");
  calibrate->add_option("--run", cal.runs, "LABEL=FILE, repeatable: rank runs");
  calibrate->add_option("--reference-t", cal.reference_t)->check(CLI::Range(0.0, 1.0));
  calibrate->add_option("--curve-out", cal.curve_out, "Write the PR curve (JSON lines)");

  std::vector<std::string> files;
  std::string language, diff_path;
  bool as_json = false;
  auto* analyze = app.add_subcommand("analyze", "Analyze files and print comments");
  analyze->add_option("--file", files, "Source file, repeatable")->required();
  analyze->add_option("--language", language, "Language (default: from extension)");
  analyze->add_option("--diff", diff_path, "Unified diff restricting comments to changed lines");
  analyze->add_flag("--json", as_json, "Print the full JSON response");

  std::string corpus, results_log;
  auto* replay = app.add_subcommand("replay", "Replay historical reviews");
  replay->add_option("--corpus", corpus, "Review files (JSON lines)")->required();
  replay->add_option("--results-log", results_log, "Append would-be comments here");

  std::string pairs;
  double factor = 1.0;
  bool anywhere = false;
  auto* resolution = app.add_subcommand("resolution", "Estimate comment resolution");
  resolution->add_option("--pairs", pairs, "Snapshot pairs (JSON lines)")->required();
  resolution->add_option("--confirmation-factor", factor)->check(CLI::Range(0.0, 1.0));
  resolution->add_flag("--match-anywhere", anywhere, "Same URL anywhere in the merged file counts as present");

  std::string report_results, feedback_log, human;
  auto* report = app.add_subcommand("report", "Distributions, useful ratio and coverage from logs");
  report->add_option("--results-log", report_results);
  report->add_option("--feedback-log", feedback_log);
  report->add_option("--human", human, "Archive of human comments for coverage");
  report->add_option("--allowlist", allowlist);

  std::string host = "127.0.0.1", serve_feedback;
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Run the HTTP analysis service");
  serve->add_option("--host", host);
  serve->add_option("--port", port, "0 picks a free port");
  serve->add_option("--feedback-log", serve_feedback);

  CLI11_PARSE(app, argc, argv);

  try {
    if (curate->parsed()) return run_curate(g, archive, allowlist);
    if (split->parsed()) return run_split(examples, cut1, cut2, out_dir);
    if (calibrate->parsed()) return run_calibrate(g, cal);
    if (analyze->parsed()) return run_analyze(g, files, language, diff_path, as_json);
    if (replay->parsed()) return run_replay(g, corpus, results_log);
    if (resolution->parsed()) return run_resolution(g, pairs, factor, anywhere);
    if (report->parsed()) return run_report(g, report_results, feedback_log, human, allowlist);
    if (serve->parsed()) return run_serve(g, host, port, serve_feedback);
  } catch (const RequestError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
