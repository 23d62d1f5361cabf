#include "bpcheck/target_dsl.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <limits>
#include <set>
#include <utility>

#include "bpcheck/errors.hpp"

namespace bpcheck {
namespace {

bool is_space_or_control(unsigned char c) {
  return c <= 0x20 || c == 0x7f;
}

bool is_scheme_char(unsigned char c) {
  return std::isalnum(c) || c == '+' || c == '-' || c == '.';
}

[[noreturn]] void fail(const std::string& what, std::size_t pos) {
  throw ParseError("target parse error at byte " + std::to_string(pos) + ": " + what, pos);
}

class Cursor {
 public:
  explicit Cursor(std::string_view text) : text_(text) {}

  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == text_.size(); }

  void expect(std::string_view token) {
    if (text_.substr(pos_, token.size()) != token) {
      fail("expected '" + std::string(token) + "'", pos_);
    }
    pos_ += token.size();
  }

  std::size_t offset() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') ++pos_;
    if (pos_ == start) {
      fail("expected decimal offset", start);
    }
    if (pos_ - start > 1 && text_[start] == '0') {
      fail("offset has leading zero", start);
    }
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, value);
    if (ec != std::errc{}) {
      fail("offset out of range", start);
    }
    return value;
  }

  std::string_view url() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != ' ') ++pos_;
    std::string_view token = text_.substr(start, pos_ - start);
    if (token.empty()) {
      fail("empty URL", start);
    }
    if (!is_valid_url(token)) {
      fail("invalid URL", start);
    }
    return token;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

bool is_valid_url(std::string_view url) noexcept {
  const auto colon = url.find(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 1 >= url.size()) {
    return false;
  }
  if (!std::isalpha(static_cast<unsigned char>(url[0]))) return false;
  for (std::size_t i = 1; i < colon; ++i) {
    if (!is_scheme_char(static_cast<unsigned char>(url[i]))) return false;
  }
  return std::none_of(url.begin(), url.end(),
                      [](char c) { return is_space_or_control(static_cast<unsigned char>(c)); });
}

void canonicalize(TargetList& targets) {
  std::set<std::pair<std::size_t, std::string_view>> seen;
  TargetList out;
  out.reserve(targets.size());
  for (auto& t : targets) {
    if (seen.emplace(t.offset, t.url).second) out.push_back(t);
  }
  targets = std::move(out);
}

TargetList parse_target(std::string_view text) {
  TargetList targets;
  if (text.empty() || text == kEmptyTarget) return targets;

  Cursor cur(text);
  while (true) {
    cur.expect("INSERT ");
    const std::size_t offset = cur.offset();
    cur.expect(" COMMENT ");
    targets.push_back({offset, std::string(cur.url())});
    if (cur.done()) break;
    cur.expect(" ");
    if (cur.done()) fail("trailing separator", cur.pos());
  }
  canonicalize(targets);
  return targets;
}

std::string serialize_target(const TargetList& targets) {
  TargetList canonical = targets;
  canonicalize(canonical);
  if (canonical.empty()) return std::string(kEmptyTarget);

  std::string out;
  for (const auto& t : canonical) {
    if (!is_valid_url(t.url)) {
      throw ValidationError("invalid target URL: '" + t.url + "'");
    }
    if (!out.empty()) out += ' ';
    out += "INSERT ";
    out += std::to_string(t.offset);
    out += " COMMENT ";
    out += t.url;
  }
  return out;
}

LineCol anchor_offset(std::string_view source, std::size_t offset) {
  if (offset > source.size()) {
    throw RangeError("offset " + std::to_string(offset) + " beyond source of " +
                     std::to_string(source.size()) + " bytes");
  }
  const auto head = source.substr(0, offset);
  const auto line = static_cast<std::size_t>(std::count(head.begin(), head.end(), '\n')) + 1;
  const auto last_nl = head.rfind('\n');
  const std::size_t line_start = last_nl == std::string_view::npos ? 0 : last_nl + 1;
  return {line, offset - line_start + 1};
}

LineSpan line_span(std::string_view source, std::size_t line) {
  std::size_t begin = 0;
  for (std::size_t current = 1; current < line; ++current) {
    const auto nl = source.find('\n', begin);
    if (nl == std::string_view::npos) {
      throw RangeError("line " + std::to_string(line) + " beyond source");
    }
    begin = nl + 1;
  }
  auto end = source.find('\n', begin);
  if (end == std::string_view::npos) end = source.size();
  return {begin, end};
}

std::vector<std::string_view> split_lines(std::string_view source) {
  std::vector<std::string_view> lines;
  std::size_t begin = 0;
  while (begin < source.size()) {
    auto nl = source.find('\n', begin);
    if (nl == std::string_view::npos) {
      lines.push_back(source.substr(begin));
      break;
    }
    lines.push_back(source.substr(begin, nl - begin));
    begin = nl + 1;
  }
  return lines;
}

}  // namespace bpcheck
