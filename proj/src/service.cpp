#include "bpcheck/service.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include <httplib.h>

#include "bpcheck/errors.hpp"
#include "bpcheck/serialization.hpp"

namespace bpcheck {
namespace {

std::ifstream open_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return in;
}

template <typename Loader>
auto load_file(const std::filesystem::path& path, Loader&& loader) {
  auto in = open_config(path);
  try {
    return loader(in);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::optional<std::pair<std::filesystem::file_time_type, std::uintmax_t>> stat_file(
    const std::filesystem::path& path) {
  std::error_code ec;
  const auto mtime = std::filesystem::last_write_time(path, ec);
  if (ec) return std::nullopt;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec) return std::nullopt;
  return std::make_pair(mtime, size);
}

void fnv1a(std::uint64_t& h, std::string_view bytes) {
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
}

json error_body(const std::string& message) { return {{"error", message}}; }

}  // namespace

void ConfigSources::fill_from_directory(const std::filesystem::path& dir) {
  const auto pick = [&](std::optional<std::filesystem::path>& slot, const char* name) {
    if (slot) return;
    const auto candidate = dir / name;
    if (std::filesystem::exists(candidate)) slot = candidate;
  };
  pick(prompts, "prompts.tsv");
  pick(thresholds, "thresholds.cfg");
  pick(rules, "rules.jsonl");
  pick(summaries, "summaries.jsonl");
}

PipelineConfig load_pipeline_config(const ConfigSources& sources) {
  PipelineConfig config;
  config.budget = sources.budget;
  config.decode = sources.decode;
  if (sources.prompts) config.prompts = load_file(*sources.prompts, load_prompt_table);
  if (sources.thresholds) config.thresholds = load_file(*sources.thresholds, load_threshold_table);
  if (sources.rules) config.rules = load_file(*sources.rules, load_suppression_rules);
  if (sources.summaries) config.summaries = load_file(*sources.summaries, load_summary_table);
  for (const auto& [lang, prompt] : config.prompts) {
    if (config.budget <= prompt.size() + 1) {
      throw ConfigError("input budget cannot hold the " + std::string(to_string(lang)) + " prompt");
    }
  }
  return config;
}

std::string config_fingerprint(const ConfigSources& sources) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto* slot : {&sources.prompts, &sources.thresholds, &sources.rules, &sources.summaries}) {
    fnv1a(h, "\x1f");
    if (!*slot) continue;
    std::ifstream in(**slot, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    fnv1a(h, buf.str());
  }
  fnv1a(h, std::to_string(sources.budget));
  fnv1a(h, to_string(sources.decode.strategy));
  fnv1a(h, std::to_string(sources.decode.beam_width));
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

ConfigStore::ConfigStore(ConfigSources sources) : sources_(std::move(sources)) { reload(); }

std::shared_ptr<const PipelineConfig> ConfigStore::current() const {
  std::lock_guard lock(mu_);
  return config_;
}

std::string ConfigStore::fingerprint() const {
  std::lock_guard lock(mu_);
  return fingerprint_;
}

void ConfigStore::reload() {
  const auto before = sources_.rules ? stat_file(*sources_.rules) : std::nullopt;
  auto fresh = std::make_shared<const PipelineConfig>(load_pipeline_config(sources_));
  auto print = config_fingerprint(sources_);
  std::lock_guard lock(mu_);
  config_ = std::move(fresh);
  fingerprint_ = std::move(print);
  if (before) {
    rules_mtime_ = before->first;
    rules_size_ = before->second;
  }
}

bool ConfigStore::reload_if_rules_changed() {
  if (!sources_.rules) return false;
  const auto now = stat_file(*sources_.rules);
  if (!now) return false;
  {
    std::lock_guard lock(mu_);
    if (rules_mtime_ == now->first && rules_size_ == now->second) return false;
    rules_mtime_ = now->first;
    rules_size_ = now->second;
  }
  try {
    reload();
    return true;
  } catch (const ConfigError&) {
    return false;
  }
}

AnalysisService::AnalysisService(std::shared_ptr<ConfigStore> config,
                                 std::shared_ptr<const Backend> backend,
                                 std::shared_ptr<FeedbackLog> feedback)
    : config_(std::move(config)), backend_(std::move(backend)), feedback_(std::move(feedback)) {}

AnalyzeResponse AnalysisService::handle_analyze(const AnalyzeRequest& request) const {
  const auto started = std::chrono::steady_clock::now();
  auto config = config_->current();

  std::set<std::string> paths;
  std::vector<Language> languages;
  languages.reserve(request.files.size());
  for (const auto& f : request.files) {
    if (!paths.insert(f.path).second) throw RequestError(400, "duplicate path in request: " + f.path);
    const auto lang = language_from_string(f.language);
    if (!lang || !config->prompts.contains(*lang)) {
      throw RequestError(400, "unsupported language: " + f.language);
    }
    languages.push_back(*lang);
  }

  std::optional<ChangedLineSet> changed;
  if (request.diff) {
    try {
      changed = changed_lines_from_diff(*request.diff);
    } catch (const ParseError& e) {
      throw RequestError(400, e.what());
    }
  }

  if (request.strategy_override && *request.strategy_override != config->decode.strategy) {
    auto adjusted = std::make_shared<PipelineConfig>(*config);
    adjusted->decode.strategy = *request.strategy_override;
    config = std::move(adjusted);
  }

  AnalyzeResponse response;
  std::size_t backend_failures = 0;
  for (std::size_t i = 0; i < request.files.size(); ++i) {
    const auto& f = request.files[i];
    FileSnapshot snap;
    snap.review_id = "request";
    snap.path = f.path;
    snap.language = languages[i];
    snap.content = f.content;
    try {
      auto analysis = analyze_snapshot(snap, changed, *config, *backend_);
      response.stats += analysis.counts;
      std::move(analysis.comments.begin(), analysis.comments.end(), std::back_inserter(response.comments));
      std::move(analysis.suppressed.begin(), analysis.suppressed.end(),
                std::back_inserter(response.suppressed));
    } catch (const TransportError& e) {
      ++backend_failures;
      response.errors.push_back({f.path, "backend", e.what()});
    } catch (const Error& e) {
      response.errors.push_back({f.path, "input", e.what()});
    }
  }
  if (!request.files.empty() && backend_failures == request.files.size()) {
    throw RequestError(502, "backend failed for every file: " + response.errors.front().message);
  }

  std::sort(response.comments.begin(), response.comments.end(), [](const auto& a, const auto& b) {
    return std::tie(a.path, a.start.line, a.origin_offset, a.url) <
           std::tie(b.path, b.start.line, b.origin_offset, b.url);
  });
  response.elapsed_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  return response;
}

FeedbackAck AnalysisService::handle_feedback(const FeedbackEvent& event) const {
  if (!feedback_) throw RequestError(503, "feedback log not configured");
  return record_feedback(event, *feedback_);
}

std::string AnalysisService::health_json() const {
  return json{{"status", "ok"}, {"config_fingerprint", config_->fingerprint()}, {"backend", backend_->identity()}}
      .dump();
}

AnalyzeRequest parse_analyze_request(const std::string& body) {
  AnalyzeRequest req;
  try {
    const auto j = json::parse(body);
    for (const auto& f : j.at("files")) {
      req.files.push_back({f.at("path").get<std::string>(), f.at("language").get<std::string>(),
                           f.at("content").get<std::string>()});
    }
    if (j.contains("diff") && !j.at("diff").is_null()) req.diff = j.at("diff").get<std::string>();
    if (j.contains("strategy_override") && !j.at("strategy_override").is_null()) {
      req.strategy_override = strategy_from_string(j.at("strategy_override").get<std::string>());
    }
  } catch (const std::exception& e) {
    throw RequestError(400, std::string("malformed analyze request: ") + e.what());
  }
  return req;
}

std::string analyze_response_json(const AnalyzeResponse& response) {
  json errors = json::array();
  for (const auto& e : response.errors) {
    errors.push_back({{"path", e.path}, {"kind", e.kind}, {"message", e.message}});
  }
  json suppressed = json::array();
  for (const auto& s : response.suppressed) {
    suppressed.push_back({{"prediction", s.prediction}, {"reason", s.reason}});
  }
  return json{{"comments", response.comments},
              {"errors", errors},
              {"suppressed", suppressed},
              {"stats", response.stats},
              {"elapsed_ms", response.elapsed_ms}}
      .dump();
}

void install_routes(httplib::Server& server, const AnalysisService& service) {
  // Small JSON replies otherwise wait on delayed ACKs.
  server.set_tcp_nodelay(true);
  const auto reply = [](httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  };

  server.Post("/v1/analyze", [&service, reply](const httplib::Request& req, httplib::Response& res) {
    service.config().reload_if_rules_changed();
    try {
      const auto response = service.handle_analyze(parse_analyze_request(req.body));
      res.status = 200;
      res.set_content(analyze_response_json(response), "application/json");
    } catch (const RequestError& e) {
      reply(res, e.status(), error_body(e.what()));
    } catch (const std::exception& e) {
      reply(res, 500, error_body(e.what()));
    }
  });

  server.Post("/v1/feedback", [&service, reply](const httplib::Request& req, httplib::Response& res) {
    FeedbackEvent event;
    try {
      event = json::parse(req.body).get<FeedbackEvent>();
    } catch (const std::exception& e) {
      reply(res, 400, error_body(std::string("malformed feedback event: ") + e.what()));
      return;
    }
    try {
      const auto ack = service.handle_feedback(event);
      reply(res, 200, {{"sequence", ack.sequence}});
    } catch (const RequestError& e) {
      reply(res, e.status(), error_body(e.what()));
    } catch (const ValidationError& e) {
      reply(res, 400, error_body(e.what()));
    } catch (const std::exception& e) {
      reply(res, 500, error_body(e.what()));
    }
  });

  server.Post("/v1/reload", [&service, reply](const httplib::Request&, httplib::Response& res) {
    try {
      service.config().reload();
      reply(res, 200, {{"config_fingerprint", service.config().fingerprint()}});
    } catch (const std::exception& e) {
      reply(res, 500, error_body(e.what()));
    }
  });

  server.Get("/v1/health", [&service](const httplib::Request&, httplib::Response& res) {
    service.config().reload_if_rules_changed();
    res.set_content(service.health_json(), "application/json");
  });
}

}  // namespace bpcheck
