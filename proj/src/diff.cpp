#include "bpcheck/diff.hpp"

#include <algorithm>
#include <charconv>

#include "bpcheck/errors.hpp"
#include "bpcheck/target_dsl.hpp"

namespace bpcheck {
namespace {

struct HunkHeader {
  std::size_t old_start = 0;
  std::size_t old_count = 1;
  std::size_t new_start = 0;
  std::size_t new_count = 1;
};

[[noreturn]] void bad_diff(const std::string& what, std::size_t lineno) {
  throw ParseError("diff line " + std::to_string(lineno) + ": " + what, lineno);
}

bool read_number(std::string_view& s, std::size_t& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc{} || ptr == s.data()) return false;
  s.remove_prefix(static_cast<std::size_t>(ptr - s.data()));
  return true;
}

// "-a[,b] +c[,d]" after "@@ ", followed by " @@".
bool read_range(std::string_view& s, char sign, std::size_t& start, std::size_t& count) {
  if (s.empty() || s.front() != sign) return false;
  s.remove_prefix(1);
  if (!read_number(s, start)) return false;
  count = 1;
  if (!s.empty() && s.front() == ',') {
    s.remove_prefix(1);
    if (!read_number(s, count)) return false;
  }
  return true;
}

HunkHeader parse_hunk_header(std::string_view line, std::size_t lineno) {
  HunkHeader h;
  auto s = line.substr(2);
  if (!s.starts_with(" ")) bad_diff("malformed hunk header", lineno);
  s.remove_prefix(1);
  if (!read_range(s, '-', h.old_start, h.old_count)) bad_diff("malformed hunk header", lineno);
  if (!s.starts_with(" ")) bad_diff("malformed hunk header", lineno);
  s.remove_prefix(1);
  if (!read_range(s, '+', h.new_start, h.new_count)) bad_diff("malformed hunk header", lineno);
  if (!s.starts_with(" @@")) bad_diff("malformed hunk header", lineno);
  if (h.new_count > 0 && h.new_start == 0) bad_diff("hunk starts at new line 0", lineno);
  return h;
}

std::optional<std::string> header_path(std::string_view rest) {
  const auto tab = rest.find('\t');
  if (tab != std::string_view::npos) rest = rest.substr(0, tab);
  while (!rest.empty() && (rest.back() == '\r' || rest.back() == ' ')) rest.remove_suffix(1);
  if (rest == "/dev/null") return std::nullopt;
  if (rest.starts_with("b/")) rest.remove_prefix(2);
  return std::string(rest);
}

}  // namespace

ChangedLineSet changed_lines_from_diff(std::string_view diff_text) {
  ChangedLineSet changed;
  std::set<std::size_t>* current = nullptr;
  bool have_file = false;
  std::size_t old_left = 0;
  std::size_t new_left = 0;
  std::size_t new_line = 0;

  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos < diff_text.size()) {
    auto nl = diff_text.find('\n', pos);
    if (nl == std::string_view::npos) nl = diff_text.size();
    std::string_view line = diff_text.substr(pos, nl - pos);
    pos = nl + 1;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (old_left > 0 || new_left > 0) {
      if (line.starts_with("\\")) continue;
      const char tag = line.empty() ? ' ' : line.front();
      if (tag == ' ') {
        if (old_left == 0 || new_left == 0) bad_diff("context line beyond hunk counts", lineno);
        --old_left;
        --new_left;
        ++new_line;
      } else if (tag == '+') {
        if (new_left == 0) bad_diff("added line beyond hunk counts", lineno);
        if (current != nullptr) current->insert(new_line);
        --new_left;
        ++new_line;
      } else if (tag == '-') {
        if (old_left == 0) bad_diff("removed line beyond hunk counts", lineno);
        --old_left;
      } else {
        bad_diff("hunk body shorter than its header", lineno);
      }
      continue;
    }

    if (line.starts_with("+++ ")) {
      have_file = true;
      const auto path = header_path(line.substr(4));
      current = path ? &changed[*path] : nullptr;
    } else if (line.starts_with("@@")) {
      if (!have_file) bad_diff("hunk before any +++ header", lineno);
      const auto h = parse_hunk_header(line, lineno);
      old_left = h.old_count;
      new_left = h.new_count;
      new_line = h.new_start;
    }
  }
  if (old_left > 0 || new_left > 0) bad_diff("diff ends inside a hunk", lineno);
  return changed;
}

std::vector<LineEdit> diff_lines(const std::vector<std::string_view>& a,
                                 const std::vector<std::string_view>& b) {
  const auto n = static_cast<std::ptrdiff_t>(a.size());
  const auto m = static_cast<std::ptrdiff_t>(b.size());
  const std::ptrdiff_t max = n + m;
  std::vector<LineEdit> edits;
  if (max == 0) return edits;

  std::vector<std::ptrdiff_t> v(static_cast<std::size_t>(2 * max + 2), 0);
  const auto at = [&](std::vector<std::ptrdiff_t>& vec, std::ptrdiff_t k) -> std::ptrdiff_t& {
    return vec[static_cast<std::size_t>(k + max)];
  };
  std::vector<std::vector<std::ptrdiff_t>> trace;

  std::ptrdiff_t final_d = 0;
  for (std::ptrdiff_t d = 0; d <= max; ++d) {
    trace.push_back(v);
    bool done = false;
    for (std::ptrdiff_t k = -d; k <= d; k += 2) {
      std::ptrdiff_t x;
      if (k == -d || (k != d && at(v, k - 1) < at(v, k + 1))) {
        x = at(v, k + 1);
      } else {
        x = at(v, k - 1) + 1;
      }
      std::ptrdiff_t y = x - k;
      while (x < n && y < m && a[static_cast<std::size_t>(x)] == b[static_cast<std::size_t>(y)]) {
        ++x;
        ++y;
      }
      at(v, k) = x;
      if (x >= n && y >= m) {
        done = true;
        break;
      }
    }
    if (done) {
      final_d = d;
      break;
    }
  }

  std::ptrdiff_t x = n;
  std::ptrdiff_t y = m;
  for (std::ptrdiff_t d = final_d; d >= 0; --d) {
    auto& vd = trace[static_cast<std::size_t>(d)];
    const std::ptrdiff_t k = x - y;
    std::ptrdiff_t prev_k;
    if (k == -d || (k != d && at(vd, k - 1) < at(vd, k + 1))) {
      prev_k = k + 1;
    } else {
      prev_k = k - 1;
    }
    const std::ptrdiff_t prev_x = d == 0 ? 0 : at(vd, prev_k);
    const std::ptrdiff_t prev_y = d == 0 ? 0 : prev_x - prev_k;
    while (x > prev_x && y > prev_y) {
      --x;
      --y;
      edits.push_back({LineEdit::Op::keep, static_cast<std::size_t>(x), static_cast<std::size_t>(y)});
    }
    if (d > 0) {
      if (x == prev_x) {
        --y;
        edits.push_back({LineEdit::Op::insert, static_cast<std::size_t>(x), static_cast<std::size_t>(y)});
      } else {
        --x;
        edits.push_back({LineEdit::Op::remove, static_cast<std::size_t>(x), static_cast<std::size_t>(y)});
      }
    }
  }
  std::reverse(edits.begin(), edits.end());
  return edits;
}

std::string unified_diff(std::string_view old_source, std::string_view new_source,
                         const std::string& path, std::size_t context) {
  const auto a = split_lines(old_source);
  const auto b = split_lines(new_source);
  const auto edits = diff_lines(a, b);

  std::vector<std::size_t> changes;
  for (std::size_t i = 0; i < edits.size(); ++i) {
    if (edits[i].op != LineEdit::Op::keep) changes.push_back(i);
  }
  if (changes.empty()) return {};

  std::string out = "--- a/" + path + "\n+++ b/" + path + "\n";
  std::size_t c = 0;
  while (c < changes.size()) {
    // Grow the hunk while the next change is within 2*context kept lines.
    std::size_t last = c;
    while (last + 1 < changes.size() && changes[last + 1] - changes[last] <= 2 * context + 1) ++last;
    const std::size_t begin = changes[c] >= context ? changes[c] - context : 0;
    const std::size_t end = std::min(edits.size(), changes[last] + context + 1);

    std::size_t old_count = 0;
    std::size_t new_count = 0;
    std::string body;
    for (std::size_t i = begin; i < end; ++i) {
      const auto& e = edits[i];
      switch (e.op) {
        case LineEdit::Op::keep:
          ++old_count;
          ++new_count;
          body += ' ';
          body += a[e.old_index];
          break;
        case LineEdit::Op::remove:
          ++old_count;
          body += '-';
          body += a[e.old_index];
          break;
        case LineEdit::Op::insert:
          ++new_count;
          body += '+';
          body += b[e.new_index];
          break;
      }
      body += '\n';
    }
    // Start lines: index of the first line in the hunk, or the line before
    // the hunk when that side is empty.
    const auto& first = edits[begin];
    const std::size_t old_start = old_count == 0 ? first.old_index : first.old_index + 1;
    const std::size_t new_start = new_count == 0 ? first.new_index : first.new_index + 1;
    out += "@@ -" + std::to_string(old_start) + "," + std::to_string(old_count) + " +" +
           std::to_string(new_start) + "," + std::to_string(new_count) + " @@\n";
    out += body;
    c = last + 1;
  }
  return out;
}

LineMapping::LineMapping(std::string_view old_source, std::string_view new_source) {
  const auto a = split_lines(old_source);
  const auto b = split_lines(new_source);
  mapping_.assign(a.size(), std::nullopt);
  for (const auto& e : diff_lines(a, b)) {
    if (e.op == LineEdit::Op::keep) mapping_[e.old_index] = e.new_index + 1;
  }
}

std::optional<std::size_t> LineMapping::map(std::size_t old_line) const {
  if (old_line == 0 || old_line > mapping_.size()) return std::nullopt;
  return mapping_[old_line - 1];
}

}  // namespace bpcheck
