#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace bpcheck {

struct Candidate {
  std::string target_text;
  double score = 0.0;
};

enum class Strategy { greedy, beam };

std::string_view to_string(Strategy s) noexcept;
Strategy strategy_from_string(std::string_view name);  // throws ValidationError

struct DecodeConfig {
  Strategy strategy = Strategy::greedy;
  std::size_t beam_width = 4;

  std::size_t effective_width() const noexcept {
    return strategy == Strategy::greedy ? 1 : (beam_width == 0 ? 1 : beam_width);
  }
};

inline DecodeConfig greedy() { return {Strategy::greedy, 4}; }
inline DecodeConfig beam(std::size_t width = 4) { return {Strategy::beam, width}; }

struct ViolationPrediction {
  std::size_t offset = 0;
  std::string url;
  double score = 0.0;

  bool operator==(const ViolationPrediction&) const = default;
};

// A model backend maps a model input (prompt line + source) to scored
// candidate targets. Implementations must tolerate concurrent calls.
class Backend {
 public:
  virtual ~Backend() = default;

  // Returns 1..config.effective_width() candidates, each with a parseable
  // target and a score in [0, 1]. Throws TransportError when the backend
  // cannot answer.
  virtual std::vector<Candidate> analyze_raw(std::string_view input,
                                             const DecodeConfig& config) const = 0;

  virtual std::string identity() const = 0;

  // Candidates discarded because their target did not parse or their score
  // was out of range.
  std::size_t dropped_candidates() const noexcept { return dropped_.load(); }

 protected:
  void count_dropped(std::size_t n = 1) const noexcept { dropped_ += n; }

 private:
  mutable std::atomic<std::size_t> dropped_{0};
};

struct ReferenceRules {
  std::string func_doc_url = "https://go.dev/doc/comment#func";
  double func_doc_score = 0.99;

  std::string doc_period_url = "https://google.github.io/styleguide/docguide/style.html#punctuation";
  double doc_period_score = 0.85;

  std::string line_length_url = "https://google.github.io/styleguide/cppguide.html#Line_Length";
  double line_length_score = 0.70;
  std::size_t max_line_bytes = 100;
};

// Deterministic rule-based stand-in for a model. Rules:
//  - Go exported func whose doc comment does not start with the func name
//    (anchored at the `func` keyword),
//  - line-comment block directly above code whose last line lacks a
//    terminal period (anchored at the start of that last comment line),
//  - line longer than max_line_bytes (anchored at line start).
//
// Beam simulation: findings are ranked by (score desc, offset, url);
// candidate j holds the j top-ranked findings and scores as its weakest one.
// Greedy is the single top candidate.
class ReferenceBackend final : public Backend {
 public:
  explicit ReferenceBackend(ReferenceRules rules = {}) : rules_(std::move(rules)) {}

  std::vector<Candidate> analyze_raw(std::string_view input,
                                     const DecodeConfig& config) const override;
  std::string identity() const override { return "reference"; }

  struct Finding {
    std::size_t offset;
    std::string url;
    double score;
  };
  // Rule hits over raw source (no prompt line), ranked.
  std::vector<Finding> findings(std::string_view source, std::string_view comment_leader = "//") const;

  const ReferenceRules& rules() const noexcept { return rules_; }

 private:
  ReferenceRules rules_;
};

struct RemoteOptions {
  std::string base_url;  // e.g. "http://127.0.0.1:8500"
  std::chrono::milliseconds timeout{5000};
  int retries = 2;
  std::chrono::milliseconds backoff{100};  // doubled after each failed attempt
};

// Client for POST /v1/generate. A fresh connection per attempt keeps
// responses of concurrent requests apart.
class RemoteBackend final : public Backend {
 public:
  explicit RemoteBackend(RemoteOptions options);

  std::vector<Candidate> analyze_raw(std::string_view input,
                                     const DecodeConfig& config) const override;
  std::string identity() const override { return "remote:" + options_.base_url; }

 private:
  RemoteOptions options_;
};

// Strips the prompt line from a model input, returning the source part.
std::string_view source_of_input(std::string_view input) noexcept;

// Union of (offset, url) pairs over all candidates; a pair appearing in
// several candidates keeps the highest score. Sorted by (offset, url).
// Throws ParseError if a candidate target does not parse.
std::vector<ViolationPrediction> merge_candidates(const std::vector<Candidate>& candidates);

}  // namespace bpcheck
