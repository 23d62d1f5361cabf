#include "bpcheck/serialization.hpp"

#include "bpcheck/errors.hpp"
#include "bpcheck/target_dsl.hpp"

namespace bpcheck {
namespace {

Language language_field(const json& j, const char* key) {
  const auto name = j.at(key).get<std::string>();
  const auto lang = language_from_string(name);
  if (!lang) throw UnsupportedLanguageError(name);
  return *lang;
}

}  // namespace

json optional_number(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

void to_json(json& j, const FileSnapshot& s) {
  j = {{"kind", "snapshot"},          {"review_id", s.review_id},
       {"snapshot_id", s.snapshot_id}, {"path", s.path},
       {"language", to_string(s.language)}, {"content", s.content},
       {"created_at", s.created_at}};
}

void from_json(const json& j, FileSnapshot& s) {
  s.review_id = j.at("review_id").get<std::string>();
  s.snapshot_id = j.value("snapshot_id", std::uint64_t{0});
  s.path = j.at("path").get<std::string>();
  s.language = language_field(j, "language");
  s.content = j.at("content").get<std::string>();
  s.created_at = j.value("created_at", Timestamp{0});
}

void to_json(json& j, const ReviewComment& c) {
  j = {{"kind", "comment"},
       {"comment_id", c.comment_id},
       {"review_id", c.review_id},
       {"snapshot_id", c.snapshot_id},
       {"path", c.path},
       {"start_offset", c.start_offset},
       {"end_offset", c.end_offset},
       {"text", c.text},
       {"author_kind", c.author_kind == AuthorKind::human ? "human" : "automated"},
       {"created_at", c.created_at}};
}

void from_json(const json& j, ReviewComment& c) {
  c.comment_id = j.at("comment_id").get<std::string>();
  c.review_id = j.at("review_id").get<std::string>();
  c.snapshot_id = j.at("snapshot_id").get<std::uint64_t>();
  c.path = j.at("path").get<std::string>();
  c.start_offset = j.at("start_offset").get<std::size_t>();
  c.end_offset = j.value("end_offset", c.start_offset);
  c.text = j.at("text").get<std::string>();
  if (c.text.empty()) throw ValidationError("comment text is empty");
  const auto kind = j.value("author_kind", std::string("human"));
  if (kind == "human") {
    c.author_kind = AuthorKind::human;
  } else if (kind == "automated") {
    c.author_kind = AuthorKind::automated;
  } else {
    throw ValidationError("unknown author_kind '" + kind + "'");
  }
  c.created_at = j.value("created_at", Timestamp{0});
}

void to_json(json& j, const TrainingExample& e) {
  j = {{"input", e.input},
       {"target", e.target},
       {"language", to_string(e.language)},
       {"created_at", e.created_at ? json(*e.created_at) : json(nullptr)},
       {"review_id", e.review_id}};
}

void from_json(const json& j, TrainingExample& e) {
  e.input = j.at("input").get<std::string>();
  e.target = j.at("target").get<std::string>();
  (void)parse_target(e.target);
  e.language = language_field(j, "language");
  if (j.contains("created_at") && !j.at("created_at").is_null()) {
    e.created_at = j.at("created_at").get<Timestamp>();
  } else {
    e.created_at.reset();
  }
  e.review_id = j.value("review_id", std::string{});
}

void to_json(json& j, const RelevantComment& rc) {
  j = {{"comment", rc.comment}, {"urls", rc.urls}, {"snapshot", rc.snapshot}};
}

void from_json(const json& j, RelevantComment& rc) {
  rc.comment = j.at("comment").get<ReviewComment>();
  rc.urls = j.at("urls").get<std::vector<std::string>>();
  rc.snapshot = j.at("snapshot").get<FileSnapshot>();
}

void to_json(json& j, const ViolationPrediction& p) {
  j = {{"offset", p.offset}, {"url", p.url}, {"score", p.score}};
}

void from_json(const json& j, ViolationPrediction& p) {
  p.offset = j.at("offset").get<std::size_t>();
  p.url = j.at("url").get<std::string>();
  p.score = j.value("score", 1.0);
  if (!(p.score >= 0.0 && p.score <= 1.0)) throw ValidationError("score outside [0, 1]");
}

void to_json(json& j, const LineCol& lc) { j = {{"line", lc.line}, {"col", lc.col}}; }

void from_json(const json& j, LineCol& lc) {
  lc.line = j.at("line").get<std::size_t>();
  lc.col = j.at("col").get<std::size_t>();
}

void to_json(json& j, const PostedComment& c) {
  j = {{"path", c.path},   {"start", c.start},     {"end", c.end},
       {"url", c.url},     {"summary", c.summary}, {"score", c.score},
       {"offset", c.origin_offset}};
}

void from_json(const json& j, PostedComment& c) {
  c.path = j.at("path").get<std::string>();
  c.start = j.at("start").get<LineCol>();
  c.end = j.value("end", c.start);
  c.url = j.at("url").get<std::string>();
  c.summary = j.value("summary", std::string{});
  c.score = j.value("score", 1.0);
  c.origin_offset = j.value("offset", std::size_t{0});
}

void to_json(json& j, const StageCounts& c) {
  j = {{"candidates", c.candidates},       {"merged", c.merged},
       {"out_of_range", c.out_of_range},   {"below_threshold", c.below_threshold},
       {"unchanged_line", c.unchanged_line}, {"suppressed", c.suppressed},
       {"posted", c.posted},               {"missing_summaries", c.missing_summaries}};
}

void to_json(json& j, const EvalCase& c) {
  json expected = json::array();
  for (const auto& [offset, url] : c.expected) expected.push_back({{"offset", offset}, {"url", url}});
  j = {{"example_id", c.example_id}, {"expected", expected}, {"predicted", c.predicted}};
}

void from_json(const json& j, EvalCase& c) {
  c.example_id = j.value("example_id", std::string{});
  c.expected.clear();
  for (const auto& e : j.at("expected")) {
    auto url = e.at("url").get<std::string>();
    if (!is_valid_url(url)) throw ValidationError("expected URL is not absolute: " + url);
    c.expected.emplace(e.at("offset").get<std::size_t>(), std::move(url));
  }
  c.predicted = j.at("predicted").get<std::vector<ViolationPrediction>>();
}

void to_json(json& j, const PRPoint& p) {
  j = {{"t", p.t},
       {"precision", optional_number(p.precision)},
       {"recall", optional_number(p.recall)},
       {"kept", p.kept_predictions},
       {"correct_kept", p.correct_kept},
       {"expected", p.expected}};
}

void to_json(json& j, const CalibrationReport& r) {
  json urls = json::array();
  for (const auto& u : r.urls) {
    urls.push_back({{"url", u.url},
                    {"support", u.support},
                    {"threshold", optional_number(u.threshold)},
                    {"precision", optional_number(u.precision)},
                    {"suppress_recommended", u.suppress_recommended}});
  }
  j = {{"default_t", r.default_t},
       {"default_precision", optional_number(r.default_precision)},
       {"urls", urls}};
}

void to_json(json& j, const ResultRecord& r) {
  j = {{"review_id", r.review_id}, {"path", r.path}, {"snapshot_id", r.snapshot_id},
       {"offset", r.offset},       {"url", r.url},   {"score", r.score},
       {"line", r.line}};
}

void from_json(const json& j, ResultRecord& r) {
  r.review_id = j.at("review_id").get<std::string>();
  r.path = j.at("path").get<std::string>();
  r.snapshot_id = j.value("snapshot_id", std::uint64_t{0});
  r.offset = j.at("offset").get<std::size_t>();
  r.url = j.at("url").get<std::string>();
  r.score = j.value("score", 0.0);
  r.line = j.value("line", std::size_t{0});
}

void to_json(json& j, const FeedbackEvent& e) {
  j = {{"event_id", e.event_id},
       {"comment_id", e.comment_id},
       {"kind", to_string(e.kind)},
       {"surface", to_string(e.surface)},
       {"created_at", e.created_at},
       {"reporter", e.reporter}};
}

void from_json(const json& j, FeedbackEvent& e) {
  e.event_id = j.value("event_id", std::string{});
  e.comment_id = j.at("comment_id").get<std::string>();
  if (e.comment_id.empty()) throw ValidationError("feedback comment_id is empty");
  const auto kind = j.at("kind").get<std::string>();
  const auto k = feedback_kind_from_string(kind);
  if (!k) throw ValidationError("unknown feedback kind '" + kind + "'");
  e.kind = *k;
  const auto surface = j.value("surface", std::string("review"));
  const auto s = surface_from_string(surface);
  if (!s) throw ValidationError("unknown feedback surface '" + surface + "'");
  e.surface = *s;
  e.created_at = j.value("created_at", Timestamp{0});
  e.reporter = j.value("reporter", std::string{});
}

void to_json(json& j, const ReplayReport& r) {
  j = {{"files_total", r.files_total},
       {"files_changed", r.files_changed},
       {"files_with_comments", r.files_with_comments},
       {"reviews_total", r.reviews_total},
       {"reviews_with_comments", r.reviews_with_comments},
       {"comments_total", r.comments_total},
       {"backend_errors", r.backend_errors},
       {"input_errors", r.input_errors},
       {"file_posting_frequency", optional_number(r.file_posting_frequency())},
       {"review_posting_frequency", optional_number(r.review_posting_frequency())},
       {"url_histogram", r.url_histogram},
       {"stages", r.stages}};
}

void to_json(json& j, const UrlShare& s) {
  j = {{"rank", s.rank},
       {"url", s.url},
       {"count", s.count},
       {"share", s.share},
       {"cumulative_share", s.cumulative_share}};
}

void to_json(json& j, const ResolutionReport& r) {
  json per_url = json::object();
  for (const auto& [url, u] : r.per_url) per_url[url] = {{"examined", u.examined}, {"absent", u.absent}};
  j = {{"pairs_total", r.pairs_total},
       {"pairs_skipped", r.pairs_skipped},
       {"comments_examined", r.comments_examined},
       {"comment_absent_on_merged", r.comment_absent_on_merged},
       {"resolution_rate_estimate", r.resolution_rate_estimate},
       {"mapping_method", r.mapping_method},
       {"per_url", per_url}};
}

void to_json(json& j, const ReviewFile& f) {
  j = f.snapshot;
  j.erase("kind");
  j["diff"] = f.diff ? json(*f.diff) : json(nullptr);
}

void from_json(const json& j, ReviewFile& f) {
  f.snapshot = j.get<FileSnapshot>();
  if (j.contains("diff") && !j.at("diff").is_null()) {
    f.diff = j.at("diff").get<std::string>();
  } else {
    f.diff.reset();
  }
}

void to_json(json& j, const SnapshotPair& p) {
  j = {{"initial", p.initial}, {"merged", p.merged}, {"comments_on_initial", p.comments_on_initial}};
}

void from_json(const json& j, SnapshotPair& p) {
  p.initial = j.at("initial").get<FileSnapshot>();
  p.merged = j.at("merged").get<FileSnapshot>();
  p.comments_on_initial.clear();
  if (j.contains("comments_on_initial")) {
    p.comments_on_initial = j.at("comments_on_initial").get<std::vector<PostedComment>>();
  }
}

}  // namespace bpcheck
