#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "bpcheck/backend.hpp"
#include "bpcheck/errors.hpp"
#include "bpcheck/pipeline.hpp"
#include "bpcheck/replay.hpp"

namespace httplib {
class Server;
}

namespace bpcheck {

struct RequestFile {
  std::string path;
  std::string language;
  std::string content;
};

struct AnalyzeRequest {
  std::vector<RequestFile> files;
  std::optional<std::string> diff;
  std::optional<Strategy> strategy_override;
};

struct FileError {
  std::string path;
  std::string kind;  // "backend" | "input"
  std::string message;
};

struct AnalyzeResponse {
  std::vector<PostedComment> comments;  // sorted by (path, line)
  std::vector<FileError> errors;
  std::vector<SuppressedPrediction> suppressed;
  StageCounts stats;
  double elapsed_ms = 0.0;
};

// Thrown for requests that must be rejected as a whole.
class RequestError : public Error {
 public:
  RequestError(int status, const std::string& message) : Error(message), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

// Where a service's configuration comes from. Unset paths fall back to
// built-in defaults (empty rules, empty summaries, default threshold).
struct ConfigSources {
  std::optional<std::filesystem::path> prompts;
  std::optional<std::filesystem::path> thresholds;
  std::optional<std::filesystem::path> rules;
  std::optional<std::filesystem::path> summaries;
  std::size_t budget = kDefaultInputBudget;
  DecodeConfig decode = greedy();

  // Fills unset paths from files present in `dir`: prompts.tsv,
  // thresholds.cfg, rules.jsonl, summaries.jsonl.
  void fill_from_directory(const std::filesystem::path& dir);
};

// Loads every source or throws ConfigError; never returns a partial config.
PipelineConfig load_pipeline_config(const ConfigSources& sources);

// Hex FNV-1a over the loaded configuration files, for /v1/health.
std::string config_fingerprint(const ConfigSources& sources);

// Holds the active configuration as an immutable snapshot. Readers take a
// shared_ptr copy; reloads swap the pointer in one step.
class ConfigStore {
 public:
  explicit ConfigStore(ConfigSources sources);  // throws ConfigError

  std::shared_ptr<const PipelineConfig> current() const;
  std::string fingerprint() const;
  const ConfigSources& sources() const noexcept { return sources_; }

  // Re-reads all sources. On failure the previous snapshot stays active and
  // the ConfigError propagates.
  void reload();

  // Reloads when the rules file changed on disk since the last load. Returns
  // true when a new snapshot was installed. Malformed files leave the
  // previous snapshot active.
  bool reload_if_rules_changed();

 private:
  ConfigSources sources_;
  mutable std::mutex mu_;
  std::shared_ptr<const PipelineConfig> config_;
  std::string fingerprint_;
  std::optional<std::filesystem::file_time_type> rules_mtime_;
  std::optional<std::uintmax_t> rules_size_;
};

class AnalysisService {
 public:
  AnalysisService(std::shared_ptr<ConfigStore> config, std::shared_ptr<const Backend> backend,
                  std::shared_ptr<FeedbackLog> feedback = nullptr);

  // Throws RequestError(400) for unsupported languages or duplicate paths;
  // RequestError(502) when every file failed in the backend. Other per-file
  // failures land in AnalyzeResponse::errors.
  AnalyzeResponse handle_analyze(const AnalyzeRequest& request) const;

  FeedbackAck handle_feedback(const FeedbackEvent& event) const;

  std::string health_json() const;

  ConfigStore& config() const noexcept { return *config_; }
  const Backend& backend() const noexcept { return *backend_; }

 private:
  std::shared_ptr<ConfigStore> config_;
  std::shared_ptr<const Backend> backend_;
  std::shared_ptr<FeedbackLog> feedback_;
};

AnalyzeRequest parse_analyze_request(const std::string& body);  // RequestError(400)
std::string analyze_response_json(const AnalyzeResponse& response);

// Routes:
//   POST /v1/analyze   AnalyzeRequest -> AnalyzeResponse
//   POST /v1/feedback  FeedbackEvent  -> {"sequence": n}
//   POST /v1/reload    re-read configuration
//   GET  /v1/health    {"status", "config_fingerprint", "backend"}
// Each request first picks up an edited rules file.
void install_routes(httplib::Server& server, const AnalysisService& service);

}  // namespace bpcheck
