#include "bpcheck/pipeline.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <tuple>

#include <json.hpp>

#include "bpcheck/errors.hpp"

namespace bpcheck {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool in_unit_range(double t) { return t >= 0.0 && t <= 1.0; }

double parse_threshold(std::string_view text, std::size_t lineno) {
  std::string s(text);
  std::size_t used = 0;
  double t = 0.0;
  try {
    t = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || !in_unit_range(t)) {
    throw ConfigError("threshold line " + std::to_string(lineno) + ": '" + s +
                      "' is not a number in [0, 1]");
  }
  return t;
}

}  // namespace

double ThresholdTable::threshold_for(const std::string& url) const {
  const auto it = per_url.find(url);
  return it == per_url.end() ? default_t : it->second;
}

void ThresholdTable::validate() const {
  if (!in_unit_range(default_t)) throw ValidationError("default threshold outside [0, 1]");
  for (const auto& [url, t] : per_url) {
    if (!in_unit_range(t)) throw ValidationError("threshold for " + url + " outside [0, 1]");
  }
}

ThresholdTable load_threshold_table(std::istream& in) {
  ThresholdTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    const auto space = view.find_first_of(" \t");
    if (space == std::string_view::npos) {
      throw ConfigError("threshold line " + std::to_string(lineno) + ": expected '<key> <t>'");
    }
    const auto key = view.substr(0, space);
    const double t = parse_threshold(trim(view.substr(space + 1)), lineno);
    if (key == "default") {
      table.default_t = t;
    } else if (!table.per_url.emplace(std::string(key), t).second) {
      throw ConfigError("threshold line " + std::to_string(lineno) + ": duplicate URL " +
                        std::string(key));
    }
  }
  return table;
}

void write_threshold_table(std::ostream& out, const ThresholdTable& table) {
  // Shortest text that reads back to the same double.
  const auto text = [](double t) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, t);
    return std::string(buf, res.ptr);
  };
  std::string body = "default " + text(table.default_t) + "\n";
  for (const auto& [url, t] : table.per_url) body += url + " " + text(t) + "\n";
  out << body;
}

SuppressionRule::SuppressionRule(std::string url_pattern, std::optional<std::string> source_pattern,
                                 std::optional<std::string> path_glob, std::string reason,
                                 bool active, bool match_full_file)
    : url_pattern_(std::move(url_pattern)),
      source_pattern_(std::move(source_pattern)),
      path_glob_(std::move(path_glob)),
      reason_(std::move(reason)),
      active_(active),
      match_full_file_(match_full_file) {
  if (url_pattern_.empty()) throw ValidationError("suppression rule needs a url_pattern");
  if (source_pattern_) {
    try {
      source_regex_ = std::make_shared<const std::regex>(*source_pattern_, std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
      throw ValidationError("suppression source_pattern does not compile: " + std::string(e.what()));
    }
  }
}

bool SuppressionRule::matches(const ViolationPrediction& pred, std::string_view source,
                              std::string_view path) const {
  if (!active_ || !pred.url.starts_with(url_pattern_)) return false;
  if (path_glob_ && ::fnmatch(path_glob_->c_str(), std::string(path).c_str(), 0) != 0) return false;
  if (source_regex_) {
    std::string_view scope = source;
    if (!match_full_file_) {
      if (pred.offset > source.size()) return false;
      const auto line = anchor_offset(source, pred.offset).line;
      const auto span = line_span(source, line);
      scope = source.substr(span.begin, span.end - span.begin);
    }
    if (!std::regex_search(scope.begin(), scope.end(), *source_regex_)) return false;
  }
  return true;
}

std::vector<SuppressionRule> load_suppression_rules(std::istream& in) {
  std::vector<SuppressionRule> rules;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      auto opt = [&](const char* key) -> std::optional<std::string> {
        if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
        return j.at(key).get<std::string>();
      };
      rules.emplace_back(j.at("url_pattern").get<std::string>(), opt("source_pattern"),
                         opt("path_glob"), j.value("reason", std::string{}),
                         j.value("active", true), j.value("match_full_file", false));
    } catch (const std::exception& e) {
      throw ConfigError("rules line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rules;
}

SummaryTable load_summary_table(std::istream& in) {
  SummaryTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      auto summary = j.at("summary").get<std::string>();
      if (summary.empty()) throw ValidationError("empty summary");
      table[j.at("url").get<std::string>()] = std::move(summary);
    } catch (const std::exception& e) {
      throw ConfigError("summaries line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return table;
}

std::vector<ViolationPrediction> apply_thresholds(const std::vector<ViolationPrediction>& preds,
                                                  const ThresholdTable& table) {
  std::vector<ViolationPrediction> kept;
  for (const auto& p : preds) {
    if (p.score > table.threshold_for(p.url)) kept.push_back(p);
  }
  return kept;
}

std::vector<ViolationPrediction> filter_changed_lines(const std::vector<ViolationPrediction>& preds,
                                                      std::string_view source,
                                                      const ChangedLineSet& changed,
                                                      const std::string& path) {
  std::vector<ViolationPrediction> kept;
  const auto it = changed.find(path);
  if (it == changed.end()) return kept;
  for (const auto& p : preds) {
    if (p.offset <= source.size() && it->second.contains(anchor_offset(source, p.offset).line)) {
      kept.push_back(p);
    }
  }
  return kept;
}

SuppressionOutcome apply_suppressions(const std::vector<ViolationPrediction>& preds,
                                      std::string_view source, std::string_view path,
                                      const std::vector<SuppressionRule>& rules) {
  SuppressionOutcome out;
  for (const auto& p : preds) {
    const auto rule = std::find_if(rules.begin(), rules.end(),
                                   [&](const SuppressionRule& r) { return r.matches(p, source, path); });
    if (rule == rules.end()) {
      out.kept.push_back(p);
    } else {
      out.suppressed.push_back({p, rule->reason()});
    }
  }
  return out;
}

std::vector<PostedComment> render_comments(const std::vector<ViolationPrediction>& preds,
                                           std::string_view source, const std::string& path,
                                           const SummaryTable& summaries,
                                           std::size_t* missing_summaries) {
  std::vector<PostedComment> out;
  out.reserve(preds.size());
  for (const auto& p : preds) {
    const auto at = anchor_offset(source, p.offset);
    const auto span = line_span(source, at.line);
    PostedComment c;
    c.path = path;
    c.start = {at.line, 1};
    c.end = {at.line, span.end - span.begin + 1};
    c.url = p.url;
    c.score = p.score;
    c.origin_offset = p.offset;
    if (const auto it = summaries.find(p.url); it != summaries.end()) {
      c.summary = it->second;
    } else {
      c.summary = std::string(kPlaceholderSummary);
      if (missing_summaries != nullptr) ++*missing_summaries;
    }
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(), [](const PostedComment& a, const PostedComment& b) {
    return std::tie(a.start.line, a.origin_offset, a.url) < std::tie(b.start.line, b.origin_offset, b.url);
  });
  return out;
}

StageCounts& StageCounts::operator+=(const StageCounts& o) {
  candidates += o.candidates;
  merged += o.merged;
  out_of_range += o.out_of_range;
  below_threshold += o.below_threshold;
  unchanged_line += o.unchanged_line;
  suppressed += o.suppressed;
  posted += o.posted;
  missing_summaries += o.missing_summaries;
  return *this;
}

SnapshotAnalysis analyze_snapshot(const FileSnapshot& snapshot,
                                  const std::optional<ChangedLineSet>& changed,
                                  const PipelineConfig& config, const Backend& backend) {
  SnapshotAnalysis result;
  auto& counts = result.counts;
  const std::string_view source = snapshot.content;

  const auto input = build_model_input(snapshot, config.prompts, config.budget);
  const auto candidates = backend.analyze_raw(input, config.decode);
  counts.candidates = candidates.size();

  auto preds = merge_candidates(candidates);
  counts.merged = preds.size();
  std::erase_if(preds, [&](const ViolationPrediction& p) { return p.offset > source.size(); });
  counts.out_of_range = counts.merged - preds.size();

  auto passed = apply_thresholds(preds, config.thresholds);
  counts.below_threshold = preds.size() - passed.size();

  if (changed) {
    auto on_changed = filter_changed_lines(passed, source, *changed, snapshot.path);
    counts.unchanged_line = passed.size() - on_changed.size();
    passed = std::move(on_changed);
  }

  auto outcome = apply_suppressions(passed, source, snapshot.path, config.rules);
  counts.suppressed = outcome.suppressed.size();
  result.suppressed = std::move(outcome.suppressed);

  result.comments = render_comments(outcome.kept, source, snapshot.path, config.summaries,
                                    &counts.missing_summaries);
  counts.posted = result.comments.size();
  return result;
}

}  // namespace bpcheck
