#pragma once

// Synthetic Go sources with planted rule hits, hand-written diffs, and the
// brute-force oracles the tests compare against. Nothing here calls into the
// code under test except for plain data types.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "bpcheck/corpus.hpp"
#include "bpcheck/replay.hpp"

namespace synth {

inline constexpr const char* kFuncUrl = "https://go.dev/doc/comment#func";
inline constexpr const char* kPeriodUrl = "https://google.github.io/styleguide/docguide/style.html#punctuation";
inline constexpr const char* kLengthUrl = "https://google.github.io/styleguide/cppguide.html#Line_Length";
inline constexpr double kFuncScore = 0.99;
inline constexpr double kPeriodScore = 0.85;
inline constexpr double kLengthScore = 0.70;

struct Planted {
  std::size_t offset;
  std::string url;
  double score;
  std::size_t line;  // 1-based
};

struct GoFile {
  std::vector<std::string> lines;  // without '\n'
  std::vector<Planted> planted;

  std::string text() const;
};

// The Go listing from the task-format example, byte for byte.
std::string add_go_example();

// Random Go file. Block kinds are drawn from: clean doc, bad func doc (rule
// a), missing period (rule b), over-long line (rule c), undocumented helper.
// At most `max_func_hits` rule-a hits are planted.
GoFile random_go_file(std::mt19937_64& rng, std::size_t blocks, std::size_t max_func_hits = 3);

// Unified diff edit script line.
struct DiffLine {
  char tag;  // ' ', '+', '-'
  std::string text;
};

// Writes a unified diff for `path` from an edit script, grouping changes into
// hunks with `context` lines of context. Independent of the library's writer.
std::string write_diff(const std::string& path, const std::vector<DiffLine>& script, std::size_t context);

struct EditedFile {
  std::vector<DiffLine> script;
  std::set<std::size_t> added_new_lines;  // 1-based line numbers in the new file
  std::vector<std::string> old_lines;
};

// Treats `new_lines` as the result of an edit: a random subset of lines is
// marked added (or rewritten), and a few old-only lines are removed.
EditedFile random_edit(std::mt19937_64& rng, const std::vector<std::string>& new_lines, double add_prob);

// Replays a diff onto old lines; returns nullopt when it does not apply.
// Also reports which new lines came from '+' lines.
std::optional<std::vector<std::string>> replay_diff(const std::vector<std::string>& old_lines,
                                                    const std::string& diff_text,
                                                    std::set<std::size_t>* added);

std::string join_lines(const std::vector<std::string>& lines);

// ---- oracles over planted truth ------------------------------------------

struct ExpectedComment {
  std::string path;
  std::size_t line;
  std::size_t offset;
  std::string url;

  auto operator<=>(const ExpectedComment&) const = default;
};

// Comments the reference backend + pipeline should post: top `width`
// planted hits by (score desc, offset, url), score > threshold, on a changed
// line when `changed` is set.
std::vector<ExpectedComment> expected_comments(const std::string& path, const std::vector<Planted>& planted,
                                               std::size_t width, double threshold,
                                               const std::optional<std::set<std::size_t>>& changed);

struct CorpusFile {
  bpcheck::ReviewFile file;
  std::vector<Planted> planted;
  bool counted_as_changed = true;  // false when the review diff skips this path
  // nullopt: no diff, the whole file is new.
  std::optional<std::set<std::size_t>> changed_lines;
};

// 200 files across 50 reviews. Mix of new files, edited files and files
// whose review diff does not mention them.
std::vector<CorpusFile> replay_corpus(std::uint64_t seed, std::size_t files = 200);

}  // namespace synth
