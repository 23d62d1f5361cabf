#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace bpcheck {

using Timestamp = std::int64_t;  // UTC epoch seconds

enum class Language { cpp, go, java, javascript, kotlin, python, typescript };

std::string_view to_string(Language lang) noexcept;
std::optional<Language> language_from_string(std::string_view name) noexcept;
// Guess from the file extension ("x.go" -> go). nullopt when unknown.
std::optional<Language> language_from_path(std::string_view path) noexcept;

struct FileSnapshot {
  std::string review_id;
  std::uint64_t snapshot_id = 0;
  std::string path;
  Language language = Language::go;
  std::string content;
  Timestamp created_at = 0;
};

enum class AuthorKind { human, automated };

struct ReviewComment {
  std::string comment_id;
  std::string review_id;
  std::uint64_t snapshot_id = 0;
  std::string path;
  std::size_t start_offset = 0;
  std::size_t end_offset = 0;
  std::string text;
  AuthorKind author_kind = AuthorKind::human;
  Timestamp created_at = 0;
};

struct RelevantComment {
  ReviewComment comment;
  std::vector<std::string> urls;
  FileSnapshot snapshot;
};

struct TrainingExample {
  std::string input;
  std::string target;
  Language language = Language::go;
  std::optional<Timestamp> created_at;
  std::string review_id;
};

struct DatasetSplit {
  std::vector<TrainingExample> train;
  std::vector<TrainingExample> validation;
  std::vector<TrainingExample> test;
  Timestamp cut_train_val = 0;
  Timestamp cut_val_test = 0;
};

using ArchiveRecord = std::variant<FileSnapshot, ReviewComment>;

// Per-reason counters for records dropped during ingestion. Safe to bump from
// several threads.
class SkipReport {
 public:
  SkipReport() = default;
  SkipReport(const SkipReport& other);
  SkipReport& operator=(const SkipReport& other);

  void add(const std::string& reason, std::size_t n = 1);
  void merge(const SkipReport& other);
  std::map<std::string, std::size_t> counts() const;
  std::size_t total() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::size_t> counts_;
};

using PromptTable = std::map<Language, std::string>;

// "<comment-leader> [*] Task: Check language best practices." per language.
PromptTable default_prompt_table();

inline constexpr std::size_t kDefaultInputBudget = 8192;

// Config loaders. Blank lines and lines starting with '#' are ignored.
// Prompt table lines are "language<TAB>prompt"; allowlist lines are URL
// prefixes. Throw ConfigError with the offending line number.
PromptTable load_prompt_table(std::istream& in);
std::vector<std::string> load_allowlist(std::istream& in);

// Newline-delimited JSON records with a "kind" of "snapshot" or "comment".
// Undecodable lines are skipped and counted under "malformed record".
std::vector<ArchiveRecord> read_archive(std::istream& in, SkipReport& skips);

// Absolute URLs ("scheme://...") found in free text, in order of appearance,
// with trailing sentence punctuation trimmed.
std::vector<std::string> extract_urls(std::string_view text);

std::vector<RelevantComment> extract_relevant_comments(const std::vector<ArchiveRecord>& archive,
                                                       const std::vector<std::string>& allowlist,
                                                       SkipReport& skips);

// Prompt line + '\n' + source, cut at the end to `budget` bytes. Throws
// UnsupportedLanguageError or ConfigError (budget too small for the prompt).
std::string build_model_input(const FileSnapshot& snapshot, const PromptTable& prompts,
                              std::size_t budget = kDefaultInputBudget);

// Number of source bytes that survive truncation in build_model_input.
std::size_t retained_source_bytes(const FileSnapshot& snapshot, const PromptTable& prompts,
                                  std::size_t budget);

struct CurationSkip {
  std::string reason;
};

std::variant<TrainingExample, CurationSkip> curate_example(const RelevantComment& rc,
                                                           const PromptTable& prompts,
                                                           std::size_t budget = kDefaultInputBudget);

// [cut1) train, [cut1, cut2) validation, [cut2, ...) test. Throws
// ValidationError if cut1 >= cut2 or an example has no created_at.
DatasetSplit temporal_split(const std::vector<TrainingExample>& examples, Timestamp cut1,
                            Timestamp cut2);

// relevant comments per file -> number of files with that many.
std::map<std::size_t, std::size_t> comment_multiplicity(const std::vector<RelevantComment>& rcs);

}  // namespace bpcheck
