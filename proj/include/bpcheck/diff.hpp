#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace bpcheck {

// path -> 1-based new-file line numbers that were added or modified.
using ChangedLineSet = std::map<std::string, std::set<std::size_t>>;

// Parses unified diff text. Paths come from the "+++" header with a leading
// "b/" stripped; files deleted ("+++ /dev/null") are omitted. Throws
// ParseError (position = 1-based diff line) on a malformed hunk header or a
// hunk body that disagrees with its header counts.
ChangedLineSet changed_lines_from_diff(std::string_view diff_text);

// One step of a line-level edit script.
struct LineEdit {
  enum class Op { keep, remove, insert };
  Op op;
  std::size_t old_index;  // 0-based; meaningful for keep/remove
  std::size_t new_index;  // 0-based; meaningful for keep/insert
};

// Minimal edit script (Myers) turning old_lines into new_lines.
std::vector<LineEdit> diff_lines(const std::vector<std::string_view>& old_lines,
                                 const std::vector<std::string_view>& new_lines);

// Renders a unified diff between two file versions with `context` lines of
// context, using a/ and b/ path prefixes. Empty when the files are equal.
std::string unified_diff(std::string_view old_source, std::string_view new_source,
                         const std::string& path, std::size_t context = 3);

// Line alignment between two versions of a file. Lines in unchanged runs map
// one-to-one; removed or rewritten lines are unmapped.
class LineMapping {
 public:
  LineMapping(std::string_view old_source, std::string_view new_source);

  // 1-based old line -> 1-based new line.
  std::optional<std::size_t> map(std::size_t old_line) const;
  std::size_t old_line_count() const noexcept { return mapping_.size(); }

 private:
  std::vector<std::optional<std::size_t>> mapping_;
};

inline std::optional<std::size_t> map_line(std::string_view old_source,
                                           std::string_view new_source, std::size_t old_line) {
  return LineMapping(old_source, new_source).map(old_line);
}

}  // namespace bpcheck
