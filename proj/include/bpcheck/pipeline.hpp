#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "bpcheck/backend.hpp"
#include "bpcheck/corpus.hpp"
#include "bpcheck/diff.hpp"
#include "bpcheck/target_dsl.hpp"

namespace bpcheck {

inline constexpr double kDefaultThreshold = 0.98;

struct ThresholdTable {
  double default_t = kDefaultThreshold;
  std::map<std::string, double> per_url;

  double threshold_for(const std::string& url) const;
  // Throws ValidationError if any threshold is outside [0, 1].
  void validate() const;
};

// Text format: "default <t>" and "<url> <t>" lines; '#' comments and blank
// lines ignored. Throws ConfigError naming the line.
ThresholdTable load_threshold_table(std::istream& in);
void write_threshold_table(std::ostream& out, const ThresholdTable& table);

class SuppressionRule {
 public:
  SuppressionRule(std::string url_pattern, std::optional<std::string> source_pattern,
                  std::optional<std::string> path_glob, std::string reason, bool active = true,
                  bool match_full_file = false);

  // url_pattern is a prefix (an exact URL is its own prefix). source_pattern
  // is searched in the line holding the offset, or the whole file when
  // match_full_file is set.
  bool matches(const ViolationPrediction& pred, std::string_view source,
               std::string_view path) const;

  const std::string& url_pattern() const noexcept { return url_pattern_; }
  const std::optional<std::string>& source_pattern() const noexcept { return source_pattern_; }
  const std::optional<std::string>& path_glob() const noexcept { return path_glob_; }
  const std::string& reason() const noexcept { return reason_; }
  bool active() const noexcept { return active_; }
  bool match_full_file() const noexcept { return match_full_file_; }

 private:
  std::string url_pattern_;
  std::optional<std::string> source_pattern_;
  std::shared_ptr<const std::regex> source_regex_;
  std::optional<std::string> path_glob_;
  std::string reason_;
  bool active_;
  bool match_full_file_;
};

// One JSON object per line: {url_pattern, source_pattern?, path_glob?,
// reason, active, match_full_file?}. Throws ConfigError on the first bad line.
std::vector<SuppressionRule> load_suppression_rules(std::istream& in);

using SummaryTable = std::map<std::string, std::string>;

// One JSON object per line: {url, summary}.
SummaryTable load_summary_table(std::istream& in);

inline constexpr std::string_view kPlaceholderSummary = "See linked guidance.";

struct PostedComment {
  std::string path;
  LineCol start;
  LineCol end;
  std::string url;
  std::string summary;
  double score = 0.0;
  std::size_t origin_offset = 0;

  bool operator==(const PostedComment&) const = default;
};

struct SuppressedPrediction {
  ViolationPrediction prediction;
  std::string reason;
};

struct SuppressionOutcome {
  std::vector<ViolationPrediction> kept;
  std::vector<SuppressedPrediction> suppressed;
};

// Keeps predictions with score strictly greater than their URL's threshold.
std::vector<ViolationPrediction> apply_thresholds(const std::vector<ViolationPrediction>& preds,
                                                  const ThresholdTable& table);

std::vector<ViolationPrediction> filter_changed_lines(const std::vector<ViolationPrediction>& preds,
                                                      std::string_view source,
                                                      const ChangedLineSet& changed,
                                                      const std::string& path);

SuppressionOutcome apply_suppressions(const std::vector<ViolationPrediction>& preds,
                                      std::string_view source, std::string_view path,
                                      const std::vector<SuppressionRule>& rules);

// One comment per prediction covering the prediction's whole line, sorted by
// (line, offset, url). Unknown URLs get kPlaceholderSummary and bump
// *missing_summaries when given.
std::vector<PostedComment> render_comments(const std::vector<ViolationPrediction>& preds,
                                           std::string_view source, const std::string& path,
                                           const SummaryTable& summaries,
                                           std::size_t* missing_summaries = nullptr);

// Everything analyze_snapshot needs besides the backend. Immutable once
// shared; reloads build a new instance.
struct PipelineConfig {
  PromptTable prompts = default_prompt_table();
  std::size_t budget = kDefaultInputBudget;
  DecodeConfig decode = greedy();
  ThresholdTable thresholds;
  std::vector<SuppressionRule> rules;
  SummaryTable summaries;
};

struct StageCounts {
  std::size_t candidates = 0;
  std::size_t merged = 0;
  std::size_t out_of_range = 0;
  std::size_t below_threshold = 0;
  std::size_t unchanged_line = 0;
  std::size_t suppressed = 0;
  std::size_t posted = 0;
  std::size_t missing_summaries = 0;

  StageCounts& operator+=(const StageCounts& other);
  bool operator==(const StageCounts&) const = default;
};

struct SnapshotAnalysis {
  std::vector<PostedComment> comments;
  std::vector<SuppressedPrediction> suppressed;
  StageCounts counts;
};

// build input -> backend -> merge -> thresholds -> changed lines (when a
// diff is given) -> suppressions -> render. Backend TransportError
// propagates; the filter stages never throw.
SnapshotAnalysis analyze_snapshot(const FileSnapshot& snapshot,
                                  const std::optional<ChangedLineSet>& changed,
                                  const PipelineConfig& config, const Backend& backend);

}  // namespace bpcheck
