#pragma once

// Target language of the violation model.
//
//   target  := "EMPTY" | clause (" " clause)*
//   clause  := "INSERT " offset " COMMENT " url
//   offset  := "0" | [1-9][0-9]*        (byte offset into the original source)
//   url     := absolute URL, no whitespace
//
// The empty string is accepted on parse as a synonym for "EMPTY".

#include <compare>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace bpcheck {

inline constexpr std::string_view kEmptyTarget = "EMPTY";

struct ViolationTarget {
  std::size_t offset = 0;
  std::string url;

  auto operator<=>(const ViolationTarget&) const = default;
};

using TargetList = std::vector<ViolationTarget>;

struct LineCol {
  std::size_t line = 1;
  std::size_t col = 1;

  auto operator<=>(const LineCol&) const = default;
};

// Absolute URL check: RFC 3986 scheme, ':', at least one more byte, and no
// whitespace or control bytes anywhere.
bool is_valid_url(std::string_view url) noexcept;

// Throws ParseError (position = byte offset of the failure). Duplicate
// (offset, url) pairs are dropped, keeping the first occurrence.
TargetList parse_target(std::string_view text);

// Throws ValidationError on an invalid URL. Duplicates are dropped as in
// parse_target, so the output always re-parses to the same list.
std::string serialize_target(const TargetList& targets);

// Removes repeated (offset, url) pairs in place, keeping first occurrences.
void canonicalize(TargetList& targets);

// 1-based line and byte column of `offset`. Only '\n' separates lines.
// Throws RangeError when offset > source.size().
LineCol anchor_offset(std::string_view source, std::size_t offset);

// Byte range [begin, end) of the 1-based `line`, excluding its newline.
struct LineSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};
LineSpan line_span(std::string_view source, std::size_t line);

// Splits on '\n'. A trailing newline does not start an extra line; an empty
// source has zero lines.
std::vector<std::string_view> split_lines(std::string_view source);

}  // namespace bpcheck
