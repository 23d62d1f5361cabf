#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "bpcheck/corpus.hpp"
#include "bpcheck/pipeline.hpp"

namespace bpcheck {

// A file of a historical review with the diff of the change, if any. A file
// without a diff is treated as entirely new.
struct ReviewFile {
  FileSnapshot snapshot;
  std::optional<std::string> diff;
};

struct ReplayReport {
  std::size_t files_total = 0;
  std::size_t files_changed = 0;
  std::size_t files_with_comments = 0;
  std::size_t reviews_total = 0;
  std::size_t reviews_with_comments = 0;
  std::size_t comments_total = 0;
  std::size_t backend_errors = 0;  // files whose backend call failed
  std::size_t input_errors = 0;    // bad diff or unsupported language
  std::map<std::string, std::size_t> url_histogram;
  StageCounts stages;

  std::optional<double> file_posting_frequency() const;
  std::optional<double> review_posting_frequency() const;
};

// One would-be comment as persisted by the replay.
struct ResultRecord {
  std::string review_id;
  std::string path;
  std::uint64_t snapshot_id = 0;
  std::size_t offset = 0;
  std::string url;
  double score = 0.0;
  std::size_t line = 0;
};

// Append-only newline-delimited JSON log, single writer at a time.
template <typename Record>
class AppendLog {
 public:
  explicit AppendLog(std::filesystem::path path);

  // Throws StorageError when the record cannot be written and flushed.
  // Returns the 1-based sequence number of the record within this session.
  std::size_t append(const Record& record);
  std::vector<Record> read_all() const;
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  std::mutex mu_;
  std::ofstream out_;
  std::size_t appended_ = 0;
};

using ResultsLog = AppendLog<ResultRecord>;

ReplayReport replay_reviews(const std::vector<ReviewFile>& reviews, const PipelineConfig& config,
                            const Backend& backend, ResultsLog* results = nullptr);

struct UrlShare {
  std::size_t rank = 0;
  std::string url;
  std::size_t count = 0;
  double share = 0.0;
  double cumulative_share = 0.0;
};

// Count descending, URL ascending on ties. Empty when the total is zero.
std::vector<UrlShare> url_distribution(const std::map<std::string, std::size_t>& histogram);

// Fraction of human comments with at least one URL in auto_urls.
std::optional<double> human_coverage(const std::set<std::string>& auto_urls,
                                     const std::vector<RelevantComment>& human_comments);

struct SnapshotPair {
  FileSnapshot initial;
  FileSnapshot merged;
  std::vector<PostedComment> comments_on_initial;
};

struct ResolutionOptions {
  double manual_confirmation_factor = 1.0;
  // false: same URL at the mapped line; true: same URL anywhere in the file.
  bool match_anywhere = false;
};

struct UrlResolution {
  std::size_t examined = 0;
  std::size_t absent = 0;
};

struct ResolutionReport {
  std::size_t pairs_total = 0;
  std::size_t pairs_skipped = 0;
  std::size_t comments_examined = 0;
  std::size_t comment_absent_on_merged = 0;
  double resolution_rate_estimate = 0.0;
  std::string mapping_method = "line-diff";
  std::map<std::string, UrlResolution> per_url;
  // Per examined comment in input order: true when absent on merged.
  std::vector<bool> absent_flags;
};

ResolutionReport estimate_resolution(const std::vector<SnapshotPair>& pairs,
                                     const PipelineConfig& config, const Backend& backend,
                                     const ResolutionOptions& options = {});

enum class FeedbackKind { thumbs_up, thumbs_down, please_fix };
enum class Surface { review, ide };

std::string_view to_string(FeedbackKind kind) noexcept;
std::string_view to_string(Surface surface) noexcept;
std::optional<FeedbackKind> feedback_kind_from_string(std::string_view s) noexcept;
std::optional<Surface> surface_from_string(std::string_view s) noexcept;

struct FeedbackEvent {
  std::string event_id;
  std::string comment_id;
  FeedbackKind kind = FeedbackKind::thumbs_up;
  Surface surface = Surface::review;
  Timestamp created_at = 0;
  std::string reporter;
};

// positive / (positive + negative) over comments with feedback. A comment
// with any thumbs_down is negative; otherwise up/please_fix makes it
// positive.
std::optional<double> useful_ratio(const std::vector<FeedbackEvent>& events);

using FeedbackLog = AppendLog<FeedbackEvent>;

struct FeedbackAck {
  std::size_t sequence = 0;
};

FeedbackAck record_feedback(const FeedbackEvent& event, FeedbackLog& log);

}  // namespace bpcheck
