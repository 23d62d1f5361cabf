#include <doctest.h>

#include <random>

#include "bpcheck/diff.hpp"
#include "bpcheck/errors.hpp"
#include "bpcheck/target_dsl.hpp"
#include "support/synthetic.hpp"

using namespace bpcheck;

namespace {

std::vector<std::string_view> views(const std::vector<std::string>& lines) {
  return {lines.begin(), lines.end()};
}

// Edit distance (inserts + removes) via the LCS table.
std::size_t lcs_distance(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::vector<std::size_t>> t(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      t[i][j] = a[i - 1] == b[j - 1] ? t[i - 1][j - 1] + 1 : std::max(t[i - 1][j], t[i][j - 1]);
    }
  }
  return a.size() + b.size() - 2 * t[a.size()][b.size()];
}

std::vector<std::string> random_lines(std::mt19937_64& rng, std::size_t n, int alphabet) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("l" + std::to_string(rng() % alphabet));
  return out;
}

}  // namespace

TEST_CASE("changed lines from a small diff") {
  const std::string diff =
      "diff --git a/addition/add.go b/addition/add.go\n"
      "--- a/addition/add.go\n"
      "+++ b/addition/add.go\n"
      "@@ -1,4 +1,5 @@\n"
      " package addition\n"
      " \n"
      "-// Return a sum\n"
      "+// Add returns a sum.\n"
      "+// It never overflows.\n"
      " func Add(value1, value2 int) int {\n";
  const auto changed = changed_lines_from_diff(diff);
  REQUIRE(changed.size() == 1);
  CHECK(changed.at("addition/add.go") == std::set<std::size_t>{3, 4});
}

TEST_CASE("deleted files are omitted and new files are fully changed") {
  const std::string diff =
      "--- a/gone.go\n"
      "+++ /dev/null\n"
      "@@ -1,2 +0,0 @@\n"
      "-package gone\n"
      "-\n"
      "--- /dev/null\n"
      "+++ b/fresh.go\n"
      "@@ -0,0 +1,2 @@\n"
      "+package fresh\n"
      "+\n";
  const auto changed = changed_lines_from_diff(diff);
  REQUIRE(changed.size() == 1);
  CHECK(changed.at("fresh.go") == std::set<std::size_t>{1, 2});
  CHECK(changed_lines_from_diff("").empty());
}

TEST_CASE("malformed diffs report the offending line") {
  auto position_of = [](const std::string& diff) -> std::size_t {
    try {
      changed_lines_from_diff(diff);
    } catch (const ParseError& e) {
      return e.position();
    }
    return 0;
  };
  CHECK(position_of("--- a/x\n+++ b/x\n@@ -1,1 +one @@\n x\n") == 3);
  CHECK(position_of("--- a/x\n+++ b/x\n@@ -1,2 +1,2 @@\n x\n") == 4);
  CHECK(position_of("--- a/x\n+++ b/x\n@@ -1,1 +1,1 @@\n?x\n") == 4);
  CHECK(position_of("@@ -1,1 +1,1 @@\n x\n") == 1);
}

TEST_CASE("changed lines match planted edits across 50 files") {
  std::mt19937_64 rng(17);
  std::string diff;
  std::map<std::string, std::set<std::size_t>> oracle;
  for (int f = 0; f < 50; ++f) {
    const auto go = synth::random_go_file(rng, 2 + rng() % 6);
    const auto edit = synth::random_edit(rng, go.lines, 0.2);
    const std::string path = "dir" + std::to_string(f % 7) + "/f" + std::to_string(f) + ".go";
    diff += "diff --git a/" + path + " b/" + path + "\n";
    diff += synth::write_diff(path, edit.script, 1 + f % 3);
    if (!edit.added_new_lines.empty()) oracle[path] = edit.added_new_lines;
  }
  const auto changed = changed_lines_from_diff(diff);
  for (const auto& [path, lines] : oracle) {
    REQUIRE(changed.contains(path));
    CHECK(changed.at(path) == lines);
  }
  for (const auto& [path, lines] : changed) {
    if (!oracle.contains(path)) CHECK(lines.empty());
  }
}

TEST_CASE("diff_lines is minimal and unified_diff replays") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 300; ++trial) {
    const auto a = random_lines(rng, rng() % 30, 5);
    const auto b = random_lines(rng, rng() % 30, 5);
    const auto script = diff_lines(views(a), views(b));
    std::size_t edits = 0;
    std::vector<std::string> rebuilt;
    for (const auto& e : script) {
      if (e.op == LineEdit::Op::keep) {
        CHECK(a[e.old_index] == b[e.new_index]);
        rebuilt.push_back(b[e.new_index]);
      } else if (e.op == LineEdit::Op::insert) {
        rebuilt.push_back(b[e.new_index]);
        ++edits;
      } else {
        ++edits;
      }
    }
    CHECK(rebuilt == b);
    CHECK(edits == lcs_distance(a, b));

    const auto text = unified_diff(synth::join_lines(a), synth::join_lines(b), "f.txt", trial % 4);
    if (a == b) CHECK(text.empty());
    const auto replayed = synth::replay_diff(a, text, nullptr);
    REQUIRE(replayed.has_value());
    CHECK(*replayed == b);
    CHECK_NOTHROW(changed_lines_from_diff(text));
  }
}

TEST_CASE("line mapping examples") {
  const std::string old_src = "a\nb\nc\n";
  for (std::size_t i = 1; i <= 3; ++i) CHECK(map_line(old_src, old_src, i) == i);
  CHECK(map_line(old_src, "new\na\nb\nc\n", 1) == 2u);
  CHECK(map_line(old_src, "new\na\nb\nc\n", 3) == 4u);
  CHECK_FALSE(map_line(old_src, "a\nc\n", 2).has_value());
  CHECK(map_line(old_src, "a\nc\n", 3) == 2u);
  CHECK_FALSE(map_line(old_src, "a\nB\nc\n", 2).has_value());
  CHECK_FALSE(map_line(old_src, old_src, 4).has_value());
  CHECK_FALSE(map_line(old_src, old_src, 0).has_value());
}

TEST_CASE("line mapping is injective, order preserving and content preserving") {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 300; ++trial) {
    const auto a = random_lines(rng, rng() % 40, 6);
    const auto b = random_lines(rng, rng() % 40, 6);
    const auto old_src = synth::join_lines(a);
    const auto new_src = synth::join_lines(b);
    const LineMapping m(old_src, new_src);
    CHECK(m.old_line_count() == a.size());
    std::size_t last = 0;
    std::size_t mapped = 0;
    for (std::size_t i = 1; i <= a.size(); ++i) {
      const auto j = m.map(i);
      if (!j) continue;
      ++mapped;
      CHECK(*j > last);
      last = *j;
      CHECK(a[i - 1] == b[*j - 1]);
    }
    CHECK(a.size() + b.size() - 2 * mapped == lcs_distance(a, b));
  }
}
