#include "bpcheck/replay.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include "bpcheck/errors.hpp"
#include "bpcheck/serialization.hpp"

namespace bpcheck {

template <typename Record>
AppendLog<Record>::AppendLog(std::filesystem::path path) : path_(std::move(path)) {
  out_.open(path_, std::ios::out | std::ios::app | std::ios::binary);
  if (!out_) throw StorageError("cannot open log " + path_.string());
}

template <typename Record>
std::size_t AppendLog<Record>::append(const Record& record) {
  const std::string line = json(record).dump() + "\n";
  std::lock_guard lock(mu_);
  out_.write(line.data(), static_cast<std::streamsize>(line.size()));
  out_.flush();
  if (!out_) {
    out_.clear();
    throw StorageError("write to " + path_.string() + " failed");
  }
  return ++appended_;
}

template <typename Record>
std::vector<Record> AppendLog<Record>::read_all() const {
  std::ifstream in(path_, std::ios::binary);
  if (!in) throw StorageError("cannot read log " + path_.string());
  std::vector<Record> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      records.push_back(json::parse(line).get<Record>());
    } catch (const std::exception& e) {
      throw StorageError(path_.string() + " line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return records;
}

template class AppendLog<ResultRecord>;
template class AppendLog<FeedbackEvent>;

std::optional<double> ReplayReport::file_posting_frequency() const {
  if (files_changed == 0) return std::nullopt;
  return static_cast<double>(files_with_comments) / static_cast<double>(files_changed);
}

std::optional<double> ReplayReport::review_posting_frequency() const {
  if (reviews_total == 0) return std::nullopt;
  return static_cast<double>(reviews_with_comments) / static_cast<double>(reviews_total);
}

namespace {

enum class FileOutcome { unchanged, analyzed, backend_error, input_error };

struct FileResult {
  FileOutcome outcome = FileOutcome::unchanged;
  SnapshotAnalysis analysis;
};

FileResult replay_one(const ReviewFile& file, const PipelineConfig& config, const Backend& backend) {
  FileResult r;
  try {
    std::optional<ChangedLineSet> changed;
    if (file.diff) {
      changed = changed_lines_from_diff(*file.diff);
      if (!changed->contains(file.snapshot.path)) return r;
    }
    r.analysis = analyze_snapshot(file.snapshot, changed, config, backend);
    r.outcome = FileOutcome::analyzed;
  } catch (const TransportError&) {
    r.outcome = FileOutcome::backend_error;
  } catch (const Error&) {
    r.outcome = FileOutcome::input_error;
  }
  return r;
}

// Runs fn(i) for i in [0, n) on a small worker pool.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers =
      std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
}

}  // namespace

ReplayReport replay_reviews(const std::vector<ReviewFile>& reviews, const PipelineConfig& config,
                            const Backend& backend, ResultsLog* results) {
  std::vector<FileResult> per_file(reviews.size());
  parallel_for(reviews.size(), [&](std::size_t i) { per_file[i] = replay_one(reviews[i], config, backend); });

  ReplayReport report;
  std::set<std::string> reviews_seen;
  std::set<std::string> reviews_commented;
  for (std::size_t i = 0; i < reviews.size(); ++i) {
    const auto& snap = reviews[i].snapshot;
    const auto& r = per_file[i];
    ++report.files_total;
    reviews_seen.insert(snap.review_id);
    switch (r.outcome) {
      case FileOutcome::unchanged:
        continue;
      case FileOutcome::backend_error:
        ++report.files_changed;
        ++report.backend_errors;
        continue;
      case FileOutcome::input_error:
        ++report.input_errors;
        continue;
      case FileOutcome::analyzed:
        break;
    }
    ++report.files_changed;
    report.stages += r.analysis.counts;
    if (r.analysis.comments.empty()) continue;
    ++report.files_with_comments;
    reviews_commented.insert(snap.review_id);
    for (const auto& c : r.analysis.comments) {
      ++report.comments_total;
      ++report.url_histogram[c.url];
      if (results != nullptr) {
        results->append({snap.review_id, snap.path, snap.snapshot_id, c.origin_offset, c.url, c.score,
                         c.start.line});
      }
    }
  }
  report.reviews_total = reviews_seen.size();
  report.reviews_with_comments = reviews_commented.size();
  return report;
}

std::vector<UrlShare> url_distribution(const std::map<std::string, std::size_t>& histogram) {
  std::size_t total = 0;
  for (const auto& [_, n] : histogram) total += n;
  std::vector<UrlShare> out;
  if (total == 0) return out;

  std::vector<std::pair<std::string, std::size_t>> rows(histogram.begin(), histogram.end());
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::size_t running = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    running += rows[i].second;
    out.push_back({i + 1, rows[i].first, rows[i].second,
                   static_cast<double>(rows[i].second) / static_cast<double>(total),
                   static_cast<double>(running) / static_cast<double>(total)});
  }
  return out;
}

std::optional<double> human_coverage(const std::set<std::string>& auto_urls,
                                     const std::vector<RelevantComment>& human_comments) {
  if (human_comments.empty()) return std::nullopt;
  std::size_t covered = 0;
  for (const auto& rc : human_comments) {
    if (std::any_of(rc.urls.begin(), rc.urls.end(), [&](const std::string& u) { return auto_urls.contains(u); })) {
      ++covered;
    }
  }
  return static_cast<double>(covered) / static_cast<double>(human_comments.size());
}

ResolutionReport estimate_resolution(const std::vector<SnapshotPair>& pairs,
                                     const PipelineConfig& config, const Backend& backend,
                                     const ResolutionOptions& options) {
  ResolutionReport report;
  report.pairs_total = pairs.size();
  for (const auto& pair : pairs) {
    if (pair.initial.review_id != pair.merged.review_id || pair.initial.path != pair.merged.path ||
        pair.initial.snapshot_id >= pair.merged.snapshot_id) {
      ++report.pairs_skipped;
      continue;
    }
    std::vector<PostedComment> initial_comments;
    std::vector<PostedComment> merged_comments;
    try {
      initial_comments = pair.comments_on_initial;
      if (initial_comments.empty()) {
        initial_comments = analyze_snapshot(pair.initial, std::nullopt, config, backend).comments;
      }
      merged_comments = analyze_snapshot(pair.merged, std::nullopt, config, backend).comments;
    } catch (const Error&) {
      ++report.pairs_skipped;
      continue;
    }

    const LineMapping mapping(pair.initial.content, pair.merged.content);
    for (const auto& c : initial_comments) {
      const auto mapped = mapping.map(c.start.line);
      bool present = false;
      if (options.match_anywhere) {
        present = std::any_of(merged_comments.begin(), merged_comments.end(),
                              [&](const PostedComment& m) { return m.url == c.url; });
      } else if (mapped) {
        present = std::any_of(merged_comments.begin(), merged_comments.end(), [&](const PostedComment& m) {
          return m.url == c.url && m.start.line == *mapped;
        });
      }
      ++report.comments_examined;
      auto& slot = report.per_url[c.url];
      ++slot.examined;
      report.absent_flags.push_back(!present);
      if (!present) {
        ++report.comment_absent_on_merged;
        ++slot.absent;
      }
    }
  }
  if (report.comments_examined > 0) {
    const double absent_fraction = static_cast<double>(report.comment_absent_on_merged) /
                                   static_cast<double>(report.comments_examined);
    report.resolution_rate_estimate =
        std::clamp(absent_fraction * options.manual_confirmation_factor, 0.0, 1.0);
  }
  return report;
}

std::string_view to_string(FeedbackKind kind) noexcept {
  switch (kind) {
    case FeedbackKind::thumbs_up:
      return "thumbs_up";
    case FeedbackKind::thumbs_down:
      return "thumbs_down";
    case FeedbackKind::please_fix:
      return "please_fix";
  }
  return "unknown";
}

std::string_view to_string(Surface surface) noexcept {
  return surface == Surface::review ? "review" : "ide";
}

std::optional<FeedbackKind> feedback_kind_from_string(std::string_view s) noexcept {
  if (s == "thumbs_up") return FeedbackKind::thumbs_up;
  if (s == "thumbs_down") return FeedbackKind::thumbs_down;
  if (s == "please_fix") return FeedbackKind::please_fix;
  return std::nullopt;
}

std::optional<Surface> surface_from_string(std::string_view s) noexcept {
  if (s == "review") return Surface::review;
  if (s == "ide") return Surface::ide;
  return std::nullopt;
}

std::optional<double> useful_ratio(const std::vector<FeedbackEvent>& events) {
  struct Seen {
    bool up = false;
    bool down = false;
  };
  std::map<std::string, Seen> per_comment;
  for (const auto& e : events) {
    auto& s = per_comment[e.comment_id];
    if (e.kind == FeedbackKind::thumbs_down) {
      s.down = true;
    } else {
      s.up = true;
    }
  }
  std::size_t positive = 0;
  std::size_t negative = 0;
  for (const auto& [_, s] : per_comment) {
    if (s.down) {
      ++negative;
    } else if (s.up) {
      ++positive;
    }
  }
  if (positive + negative == 0) return std::nullopt;
  return static_cast<double>(positive) / static_cast<double>(positive + negative);
}

FeedbackAck record_feedback(const FeedbackEvent& event, FeedbackLog& log) {
  if (event.comment_id.empty()) throw ValidationError("feedback event has no comment_id");
  return {log.append(event)};
}

}  // namespace bpcheck
