#include "synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <tuple>

namespace synth {

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) {
    out += l;
    out += '\n';
  }
  return out;
}

std::string GoFile::text() const { return join_lines(lines); }

std::string add_go_example() {
  return "// Package addition provides Add\n"
         "package addition\n"
         "\n"
         "// Return a sum\n"
         "func Add(value1, value2 int) int {\n"
         "\treturn value1 + value2\n"
         "}\n";
}

namespace {

struct Builder {
  GoFile file;
  std::size_t offset = 0;

  std::size_t add(std::string line) {
    const std::size_t at = offset;
    offset += line.size() + 1;
    file.lines.push_back(std::move(line));
    return at;
  }
  std::size_t line_no() const { return file.lines.size(); }
  void plant(std::size_t at, const char* url, double score) {
    file.planted.push_back({at, url, score, line_no()});
  }
};

}  // namespace

GoFile random_go_file(std::mt19937_64& rng, std::size_t blocks, std::size_t max_func_hits) {
  Builder b;
  b.add("package p" + std::to_string(rng() % 1000));
  b.add("");
  std::size_t func_hits = 0;
  std::uniform_int_distribution<int> kind_dist(0, 5);
  for (std::size_t i = 0; i < blocks; ++i) {
    const std::string name = "Name" + std::to_string(i);
    int kind = kind_dist(rng);
    if ((kind == 1 || kind == 5) && func_hits >= max_func_hits) kind = 0;
    switch (kind) {
      case 0:  // clean
        b.add("// " + name + " returns its input.");
        b.add("func " + name + "(x int) int {");
        b.add("\treturn x");
        break;
      case 1: {  // doc comment not starting with the name
        b.add("// Returns its input for " + name + ".");
        const auto at = b.add("func " + name + "(x int) int {");
        b.plant(at, kFuncUrl, kFuncScore);
        ++func_hits;
        b.add("\treturn x");
        break;
      }
      case 2: {  // missing period
        const auto at = b.add("// " + name + " returns its input");
        b.plant(at, kPeriodUrl, kPeriodScore);
        b.add("func " + name + "(x int) int {");
        b.add("\treturn x");
        break;
      }
      case 3: {  // long line
        b.add("// " + name + " measures a long literal.");
        b.add("func " + name + "() int {");
        const auto at = b.add("\ts := \"" + std::string(100 + rng() % 40, 'x') + "\"");
        b.plant(at, kLengthUrl, kLengthScore);
        b.add("\treturn len(s)");
        break;
      }
      case 4:  // undocumented, unexported
        b.add("func helper" + std::to_string(i) + "(x int) int {");
        b.add("\treturn x * 2");
        break;
      case 5: {  // both: wrong start and no period
        const auto c = b.add("// Returns its input for " + name);
        b.plant(c, kPeriodUrl, kPeriodScore);
        const auto at = b.add("func " + name + "(x int) int {");
        b.plant(at, kFuncUrl, kFuncScore);
        ++func_hits;
        b.add("\treturn x");
        break;
      }
    }
    b.add("}");
    b.add("");
  }
  return b.file;
}

std::string write_diff(const std::string& path, const std::vector<DiffLine>& script, std::size_t context) {
  std::string out = "--- a/" + path + "\n+++ b/" + path + "\n";
  std::vector<std::size_t> changes;
  for (std::size_t i = 0; i < script.size(); ++i) {
    if (script[i].tag != ' ') changes.push_back(i);
  }
  // Old/new line counts before each script index.
  std::vector<std::size_t> old_before(script.size() + 1, 0), new_before(script.size() + 1, 0);
  for (std::size_t i = 0; i < script.size(); ++i) {
    old_before[i + 1] = old_before[i] + (script[i].tag != '+' ? 1 : 0);
    new_before[i + 1] = new_before[i] + (script[i].tag != '-' ? 1 : 0);
  }
  std::size_t c = 0;
  while (c < changes.size()) {
    std::size_t last = c;
    while (last + 1 < changes.size() && changes[last + 1] - changes[last] <= 2 * context) ++last;
    const std::size_t lo = changes[c] > context ? changes[c] - context : 0;
    const std::size_t hi = std::min(script.size(), changes[last] + context + 1);
    const std::size_t old_count = old_before[hi] - old_before[lo];
    const std::size_t new_count = new_before[hi] - new_before[lo];
    const std::size_t old_start = old_before[lo] + (old_count > 0 ? 1 : 0);
    const std::size_t new_start = new_before[lo] + (new_count > 0 ? 1 : 0);
    out += "@@ -" + std::to_string(old_start) + "," + std::to_string(old_count) + " +" +
           std::to_string(new_start) + "," + std::to_string(new_count) + " @@ func\n";
    for (std::size_t i = lo; i < hi; ++i) {
      out += script[i].tag;
      out += script[i].text;
      out += '\n';
    }
    c = last + 1;
  }
  return out;
}

EditedFile random_edit(std::mt19937_64& rng, const std::vector<std::string>& new_lines, double add_prob) {
  EditedFile e;
  std::bernoulli_distribution added(add_prob);
  std::bernoulli_distribution removed(add_prob / 3);
  std::size_t serial = 0;
  for (std::size_t i = 0; i < new_lines.size(); ++i) {
    if (removed(rng)) {
      const std::string gone = "// retired line " + std::to_string(serial++);
      e.script.push_back({'-', gone});
      e.old_lines.push_back(gone);
    }
    if (added(rng)) {
      e.script.push_back({'+', new_lines[i]});
      e.added_new_lines.insert(i + 1);
    } else {
      e.script.push_back({' ', new_lines[i]});
      e.old_lines.push_back(new_lines[i]);
    }
  }
  return e;
}

std::optional<std::vector<std::string>> replay_diff(const std::vector<std::string>& old_lines,
                                                    const std::string& diff_text,
                                                    std::set<std::size_t>* added) {
  std::vector<std::string> out;
  std::size_t old_pos = 0;  // 0-based next old line to consume
  std::istringstream in(diff_text);
  std::string line;
  long old_left = 0, new_left = 0;
  while (std::getline(in, line)) {
    if (old_left > 0 || new_left > 0) {
      const char tag = line.empty() ? ' ' : line[0];
      const std::string text = line.empty() ? "" : line.substr(1);
      if (tag == ' ' || tag == '-') {
        if (old_pos >= old_lines.size() || old_lines[old_pos] != text) return std::nullopt;
        ++old_pos;
        --old_left;
        if (tag == ' ') {
          out.push_back(text);
          --new_left;
        }
      } else if (tag == '+') {
        out.push_back(text);
        if (added != nullptr) added->insert(out.size());
        --new_left;
      } else {
        return std::nullopt;
      }
      continue;
    }
    unsigned long a = 0, b = 0, cc = 0, d = 0;
    if (std::sscanf(line.c_str(), "@@ -%lu,%lu +%lu,%lu @@", &a, &b, &cc, &d) == 4) {
      const std::size_t first_old = b == 0 ? a : a - 1;  // lines to copy before the hunk
      if (first_old < old_pos || first_old > old_lines.size()) return std::nullopt;
      while (old_pos < first_old) out.push_back(old_lines[old_pos++]);
      old_left = static_cast<long>(b);
      new_left = static_cast<long>(d);
    }
  }
  while (old_pos < old_lines.size()) out.push_back(old_lines[old_pos++]);
  return out;
}

std::vector<ExpectedComment> expected_comments(const std::string& path, const std::vector<Planted>& planted,
                                               std::size_t width, double threshold,
                                               const std::optional<std::set<std::size_t>>& changed) {
  std::vector<Planted> ranked = planted;
  std::sort(ranked.begin(), ranked.end(), [](const Planted& a, const Planted& b) {
    if (a.score != b.score) return a.score > b.score;
    return std::tie(a.offset, a.url) < std::tie(b.offset, b.url);
  });
  if (ranked.size() > width) ranked.resize(width);
  std::vector<ExpectedComment> out;
  for (const auto& p : ranked) {
    if (!(p.score > threshold)) continue;
    if (changed && !changed->contains(p.line)) continue;
    out.push_back({path, p.line, p.offset, p.url});
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<CorpusFile> replay_corpus(std::uint64_t seed, std::size_t files) {
  std::mt19937_64 rng(seed);
  std::vector<CorpusFile> corpus;
  for (std::size_t f = 0; f < files; ++f) {
    const std::size_t review = f / 4;
    CorpusFile cf;
    auto go = random_go_file(rng, 3 + rng() % 6);
    auto& snap = cf.file.snapshot;
    snap.review_id = "r" + std::to_string(review);
    snap.snapshot_id = 2;
    snap.path = "pkg" + std::to_string(review) + "/file" + std::to_string(f) + ".go";
    snap.language = bpcheck::Language::go;
    snap.content = go.text();
    snap.created_at = 1'700'000'000 + static_cast<bpcheck::Timestamp>(f) * 60;
    cf.planted = go.planted;

    switch (f % 5) {
      case 0:
        break;
      case 4: {
        std::vector<DiffLine> other{{' ', "package other"}, {'+', "// Added elsewhere."}};
        cf.file.diff = write_diff("pkg" + std::to_string(review) + "/other.go", other, 3);
        cf.counted_as_changed = false;
        cf.changed_lines = std::set<std::size_t>{};
        break;
      }
      default: {
        const auto edit = random_edit(rng, go.lines, 0.25);
        cf.file.diff = write_diff(snap.path, edit.script, 3);
        cf.changed_lines = edit.added_new_lines;
        break;
      }
    }
    corpus.push_back(std::move(cf));
  }
  return corpus;
}

}  // namespace synth
