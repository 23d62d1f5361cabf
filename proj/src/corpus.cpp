#include "bpcheck/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>
#include <tuple>
#include <utility>

#include "bpcheck/errors.hpp"
#include "bpcheck/serialization.hpp"
#include "bpcheck/target_dsl.hpp"

namespace bpcheck {
namespace {

constexpr std::array<std::pair<Language, std::string_view>, 7> kLanguageNames{{
    {Language::cpp, "cpp"},
    {Language::go, "go"},
    {Language::java, "java"},
    {Language::javascript, "javascript"},
    {Language::kotlin, "kotlin"},
    {Language::python, "python"},
    {Language::typescript, "typescript"},
}};

constexpr std::string_view kTaskText = "[*] Task: Check language best practices.";

bool skippable(std::string_view line) {
  return line.empty() || line.front() == '#' ||
         std::all_of(line.begin(), line.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

std::string_view trim_right(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

bool url_char(unsigned char c) { return c > 0x20 && c != 0x7f && c != '<' && c != '>' && c != '"'; }

}  // namespace

std::string_view to_string(Language lang) noexcept {
  for (const auto& [l, name] : kLanguageNames) {
    if (l == lang) return name;
  }
  return "unknown";
}

std::optional<Language> language_from_string(std::string_view name) noexcept {
  for (const auto& [l, n] : kLanguageNames) {
    if (n == name) return l;
  }
  if (name == "c++") return Language::cpp;
  return std::nullopt;
}

std::optional<Language> language_from_path(std::string_view path) noexcept {
  const auto dot = path.rfind('.');
  if (dot == std::string_view::npos) return std::nullopt;
  const auto ext = path.substr(dot + 1);
  if (ext == "go") return Language::go;
  if (ext == "py") return Language::python;
  if (ext == "java") return Language::java;
  if (ext == "js") return Language::javascript;
  if (ext == "ts") return Language::typescript;
  if (ext == "kt") return Language::kotlin;
  if (ext == "cc" || ext == "cpp" || ext == "cxx" || ext == "h" || ext == "hpp") return Language::cpp;
  return std::nullopt;
}

SkipReport::SkipReport(const SkipReport& other) : counts_(other.counts()) {}

SkipReport& SkipReport::operator=(const SkipReport& other) {
  if (this != &other) {
    auto copy = other.counts();
    std::lock_guard lock(mu_);
    counts_ = std::move(copy);
  }
  return *this;
}

void SkipReport::add(const std::string& reason, std::size_t n) {
  std::lock_guard lock(mu_);
  counts_[reason] += n;
}

void SkipReport::merge(const SkipReport& other) {
  for (const auto& [reason, n] : other.counts()) add(reason, n);
}

std::map<std::string, std::size_t> SkipReport::counts() const {
  std::lock_guard lock(mu_);
  return counts_;
}

std::size_t SkipReport::total() const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (const auto& [_, c] : counts_) n += c;
  return n;
}

PromptTable default_prompt_table() {
  const std::string slash = "// " + std::string(kTaskText);
  const std::string hash = "# " + std::string(kTaskText);
  return {
      {Language::cpp, slash},        {Language::go, slash},     {Language::java, slash},
      {Language::javascript, slash}, {Language::kotlin, slash}, {Language::python, hash},
      {Language::typescript, slash},
  };
}

PromptTable load_prompt_table(std::istream& in) {
  PromptTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto view = trim_right(line);
    if (skippable(view)) continue;
    const auto tab = view.find('\t');
    if (tab == std::string_view::npos || tab + 1 >= view.size()) {
      throw ConfigError("prompt table line " + std::to_string(lineno) + ": expected language<TAB>prompt");
    }
    const auto lang = language_from_string(view.substr(0, tab));
    if (!lang) {
      throw ConfigError("prompt table line " + std::to_string(lineno) + ": unknown language '" +
                        std::string(view.substr(0, tab)) + "'");
    }
    const auto prompt = view.substr(tab + 1);
    if (prompt.find('\n') != std::string_view::npos) {
      throw ConfigError("prompt table line " + std::to_string(lineno) + ": prompt spans lines");
    }
    table[*lang] = std::string(prompt);
  }
  return table;
}

std::vector<std::string> load_allowlist(std::istream& in) {
  std::vector<std::string> prefixes;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto view = trim_right(line);
    if (skippable(view)) continue;
    if (!is_valid_url(view)) {
      throw ConfigError("allowlist line " + std::to_string(lineno) + ": not an absolute URL prefix");
    }
    prefixes.emplace_back(view);
  }
  return prefixes;
}

std::vector<ArchiveRecord> read_archive(std::istream& in, SkipReport& skips) {
  std::vector<ArchiveRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (trim_right(line).empty()) continue;
    try {
      const auto j = json::parse(line);
      const auto kind = j.at("kind").get<std::string>();
      if (kind == "snapshot") {
        records.emplace_back(j.get<FileSnapshot>());
      } else if (kind == "comment") {
        records.emplace_back(j.get<ReviewComment>());
      } else {
        skips.add("unknown record kind");
      }
    } catch (const std::exception&) {
      skips.add("malformed record");
    }
  }
  return records;
}

std::vector<std::string> extract_urls(std::string_view text) {
  std::vector<std::string> urls;
  std::size_t pos = 0;
  while ((pos = text.find("://", pos)) != std::string_view::npos) {
    std::size_t begin = pos;
    while (begin > 0) {
      const auto c = static_cast<unsigned char>(text[begin - 1]);
      if (!(std::isalnum(c) || c == '+' || c == '-' || c == '.')) break;
      --begin;
    }
    while (begin < pos && !std::isalpha(static_cast<unsigned char>(text[begin]))) ++begin;
    std::size_t end = pos + 3;
    while (end < text.size() && url_char(static_cast<unsigned char>(text[end]))) ++end;
    auto url = text.substr(begin, end - begin);
    while (!url.empty() && std::string_view(".,;:!?)]}'").find(url.back()) != std::string_view::npos) {
      url.remove_suffix(1);
    }
    if (begin < pos && is_valid_url(url) && url.size() > (pos - begin) + 3) {
      urls.emplace_back(url);
    }
    pos = end;
  }
  return urls;
}

std::vector<RelevantComment> extract_relevant_comments(const std::vector<ArchiveRecord>& archive,
                                                       const std::vector<std::string>& allowlist,
                                                       SkipReport& skips) {
  using Key = std::tuple<std::string, std::uint64_t, std::string>;
  std::map<Key, const FileSnapshot*> snapshots;
  for (const auto& record : archive) {
    if (const auto* s = std::get_if<FileSnapshot>(&record)) {
      snapshots[{s->review_id, s->snapshot_id, s->path}] = s;
    }
  }

  std::vector<RelevantComment> out;
  for (const auto& record : archive) {
    const auto* c = std::get_if<ReviewComment>(&record);
    if (c == nullptr || c->author_kind != AuthorKind::human) continue;

    std::vector<std::string> urls;
    for (auto& url : extract_urls(c->text)) {
      const bool allowed = std::any_of(allowlist.begin(), allowlist.end(),
                                       [&](const std::string& p) { return url.starts_with(p); });
      if (allowed && std::find(urls.begin(), urls.end(), url) == urls.end()) {
        urls.push_back(std::move(url));
      }
    }
    if (urls.empty()) continue;

    const auto it = snapshots.find({c->review_id, c->snapshot_id, c->path});
    if (it == snapshots.end()) {
      skips.add("missing snapshot");
      continue;
    }
    const FileSnapshot& snap = *it->second;
    if (c->start_offset > c->end_offset || c->end_offset > snap.content.size()) {
      skips.add("comment range outside snapshot");
      continue;
    }
    out.push_back({*c, std::move(urls), snap});
  }
  return out;
}

std::size_t retained_source_bytes(const FileSnapshot& snapshot, const PromptTable& prompts,
                                  std::size_t budget) {
  const auto it = prompts.find(snapshot.language);
  if (it == prompts.end()) throw UnsupportedLanguageError(std::string(to_string(snapshot.language)));
  const std::size_t header = it->second.size() + 1;
  if (budget <= header) {
    throw ConfigError("input budget " + std::to_string(budget) + " cannot hold the " +
                      std::string(to_string(snapshot.language)) + " prompt");
  }
  return std::min(snapshot.content.size(), budget - header);
}

std::string build_model_input(const FileSnapshot& snapshot, const PromptTable& prompts,
                              std::size_t budget) {
  const std::size_t keep = retained_source_bytes(snapshot, prompts, budget);
  const std::string& prompt = prompts.at(snapshot.language);
  std::string input;
  input.reserve(prompt.size() + 1 + keep);
  input += prompt;
  input += '\n';
  input.append(snapshot.content, 0, keep);
  return input;
}

std::variant<TrainingExample, CurationSkip> curate_example(const RelevantComment& rc,
                                                           const PromptTable& prompts,
                                                           std::size_t budget) {
  const std::size_t keep = retained_source_bytes(rc.snapshot, prompts, budget);
  const std::size_t offset = rc.comment.start_offset;
  if (offset > rc.snapshot.content.size()) return CurationSkip{"offset outside snapshot"};
  if (keep < rc.snapshot.content.size() && offset >= keep) return CurationSkip{"target truncated"};

  TargetList targets;
  targets.reserve(rc.urls.size());
  for (const auto& url : rc.urls) targets.push_back({offset, url});

  TrainingExample ex;
  ex.input = build_model_input(rc.snapshot, prompts, budget);
  ex.target = serialize_target(targets);
  ex.language = rc.snapshot.language;
  ex.created_at = rc.comment.created_at;
  ex.review_id = rc.comment.review_id;
  return ex;
}

DatasetSplit temporal_split(const std::vector<TrainingExample>& examples, Timestamp cut1,
                            Timestamp cut2) {
  if (cut1 >= cut2) {
    throw ValidationError("split cut points must satisfy cut1 < cut2");
  }
  DatasetSplit split;
  split.cut_train_val = cut1;
  split.cut_val_test = cut2;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    if (!ex.created_at) {
      throw ValidationError("example " + std::to_string(i) + " has no created_at");
    }
    if (*ex.created_at < cut1) {
      split.train.push_back(ex);
    } else if (*ex.created_at < cut2) {
      split.validation.push_back(ex);
    } else {
      split.test.push_back(ex);
    }
  }
  return split;
}

std::map<std::size_t, std::size_t> comment_multiplicity(const std::vector<RelevantComment>& rcs) {
  std::map<std::tuple<std::string, std::uint64_t, std::string>, std::size_t> per_file;
  for (const auto& rc : rcs) {
    ++per_file[{rc.snapshot.review_id, rc.snapshot.snapshot_id, rc.snapshot.path}];
  }
  std::map<std::size_t, std::size_t> histogram;
  for (const auto& [_, n] : per_file) ++histogram[n];
  return histogram;
}

}  // namespace bpcheck
