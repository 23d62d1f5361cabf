#include "bpcheck/backend.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <thread>
#include <tuple>

#include <httplib.h>
#include <json.hpp>

#include "bpcheck/errors.hpp"
#include "bpcheck/target_dsl.hpp"

namespace bpcheck {
namespace {

std::string_view ltrim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

std::string_view rtrim(std::string_view s) {
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool is_ident(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

bool is_go_source(const std::vector<std::string_view>& lines) {
  return std::any_of(lines.begin(), lines.end(),
                     [](std::string_view l) { return l.starts_with("package "); });
}

// "func Name(" or "func (r *T) Name(" -> "Name"; empty when not a func line.
std::string_view go_func_name(std::string_view line) {
  if (!line.starts_with("func ")) return {};
  auto rest = ltrim(line.substr(5));
  if (rest.starts_with("(")) {
    const auto close = rest.find(')');
    if (close == std::string_view::npos) return {};
    rest = ltrim(rest.substr(close + 1));
  }
  std::size_t n = 0;
  while (n < rest.size() && is_ident(rest[n])) ++n;
  return rest.substr(0, n);
}

// Comment-leader of the prompt line ("//" or "#"); defaults to "//".
std::string_view comment_leader(std::string_view input) {
  const auto nl = input.find('\n');
  const auto prompt = ltrim(input.substr(0, nl));
  const auto space = prompt.find(' ');
  const auto leader = prompt.substr(0, space);
  if (leader == "#" || leader == "//" || leader == "--" || leader == ";") return leader;
  return "//";
}

bool is_comment(std::string_view line, std::string_view leader) {
  return ltrim(line).starts_with(leader);
}

std::string_view comment_text(std::string_view line, std::string_view leader) {
  auto body = ltrim(line).substr(leader.size());
  if (!body.empty() && body.front() == ' ') body.remove_prefix(1);
  return rtrim(body);
}

}  // namespace

std::string_view to_string(Strategy s) noexcept {
  return s == Strategy::greedy ? "greedy" : "beam";
}

Strategy strategy_from_string(std::string_view name) {
  if (name == "greedy") return Strategy::greedy;
  if (name == "beam") return Strategy::beam;
  throw ValidationError("unknown decoding strategy '" + std::string(name) + "'");
}

std::string_view source_of_input(std::string_view input) noexcept {
  const auto nl = input.find('\n');
  return nl == std::string_view::npos ? std::string_view{} : input.substr(nl + 1);
}

namespace {

std::vector<ReferenceBackend::Finding> collect(std::string_view source, std::string_view leader,
                                               const ReferenceRules& rules) {
  std::vector<ReferenceBackend::Finding> found;
  const auto lines = split_lines(source);
  std::vector<std::size_t> starts(lines.size());
  for (std::size_t i = 0, off = 0; i < lines.size(); ++i) {
    starts[i] = off;
    off += lines[i].size() + 1;
  }

  if (leader == "//" && is_go_source(lines)) {
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const auto name = go_func_name(lines[i]);
      if (name.empty() || !std::isupper(static_cast<unsigned char>(name.front()))) continue;
      std::size_t first = i;
      while (first > 0 && is_comment(lines[first - 1], "//")) --first;
      if (first == i) continue;
      const auto doc = comment_text(lines[first], "//");
      const bool starts_with_name =
          doc.starts_with(name) && (doc.size() == name.size() || !is_ident(doc[name.size()]));
      if (!starts_with_name) found.push_back({starts[i], rules.func_doc_url, rules.func_doc_score});
    }
  }

  for (std::size_t i = 0; i + 1 < lines.size(); ++i) {
    if (!is_comment(lines[i], leader)) continue;
    const auto next = rtrim(lines[i + 1]);
    if (next.empty() || is_comment(next, leader)) continue;
    const auto text = comment_text(lines[i], leader);
    if (text.empty() || text.back() == '.') continue;
    const auto indent = lines[i].size() - ltrim(lines[i]).size();
    found.push_back({starts[i] + indent, rules.doc_period_url, rules.doc_period_score});
  }

  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].size() > rules.max_line_bytes) {
      found.push_back({starts[i], rules.line_length_url, rules.line_length_score});
    }
  }

  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) {
    return std::tie(b.score, a.offset, a.url) < std::tie(a.score, b.offset, b.url);
  });
  found.erase(std::unique(found.begin(), found.end(),
                          [](const auto& a, const auto& b) { return a.offset == b.offset && a.url == b.url; }),
              found.end());
  return found;
}

}  // namespace

std::vector<ReferenceBackend::Finding> ReferenceBackend::findings(std::string_view source,
                                                                  std::string_view comment_leader) const {
  return collect(source, comment_leader, rules_);
}

std::vector<Candidate> ReferenceBackend::analyze_raw(std::string_view input,
                                                     const DecodeConfig& config) const {
  const auto found = collect(source_of_input(input), comment_leader(input), rules_);
  if (found.empty()) return {{std::string(kEmptyTarget), 1.0}};

  const std::size_t width = std::min(config.effective_width(), found.size());
  std::vector<Candidate> out;
  out.reserve(width);
  for (std::size_t j = 1; j <= width; ++j) {
    TargetList targets;
    for (std::size_t k = 0; k < j; ++k) targets.push_back({found[k].offset, found[k].url});
    std::sort(targets.begin(), targets.end());
    out.push_back({serialize_target(targets), found[j - 1].score});
  }
  return out;
}

RemoteBackend::RemoteBackend(RemoteOptions options) : options_(std::move(options)) {
  if (options_.base_url.empty()) throw ConfigError("remote backend needs a base URL");
  if (options_.retries < 0) throw ConfigError("remote backend retries must be >= 0");
}

std::vector<Candidate> RemoteBackend::analyze_raw(std::string_view input,
                                                  const DecodeConfig& config) const {
  const nlohmann::json request = {
      {"input", std::string(input)},
      {"strategy", std::string(to_string(config.strategy))},
      {"beam_width", config.effective_width()},
  };
  const std::string body = request.dump();

  std::string last_error = "no attempt made";
  auto delay = options_.backoff;
  for (int attempt = 0; attempt <= options_.retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
    httplib::Client client(options_.base_url);
    client.set_connection_timeout(options_.timeout);
    client.set_read_timeout(options_.timeout);
    client.set_write_timeout(options_.timeout);
    auto res = client.Post("/v1/generate", body, "application/json");
    if (!res) {
      last_error = "request failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      last_error = "HTTP " + std::to_string(res->status);
      if (res->status >= 400 && res->status < 500) break;
      continue;
    }

    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception&) {
      throw TransportError(identity(), "response is not JSON");
    }
    if (!reply.is_object() || !reply.contains("candidates") || !reply["candidates"].is_array()) {
      throw TransportError(identity(), "response lacks a candidates array");
    }

    std::vector<Candidate> out;
    for (const auto& c : reply["candidates"]) {
      if (out.size() == config.effective_width()) break;
      try {
        Candidate cand{c.at("target").get<std::string>(), c.at("score").get<double>()};
        if (!(cand.score >= 0.0 && cand.score <= 1.0)) {
          count_dropped();
          continue;
        }
        (void)parse_target(cand.target_text);
        out.push_back(std::move(cand));
      } catch (const std::exception&) {
        count_dropped();
      }
    }
    if (out.empty()) throw TransportError(identity(), "response holds no usable candidate");
    return out;
  }
  throw TransportError(identity(), last_error);
}

std::vector<ViolationPrediction> merge_candidates(const std::vector<Candidate>& candidates) {
  std::map<std::pair<std::size_t, std::string>, double> best;
  for (const auto& cand : candidates) {
    for (auto& t : parse_target(cand.target_text)) {
      auto [it, inserted] = best.try_emplace({t.offset, std::move(t.url)}, cand.score);
      if (!inserted) it->second = std::max(it->second, cand.score);
    }
  }
  std::vector<ViolationPrediction> out;
  out.reserve(best.size());
  for (auto& [key, score] : best) out.push_back({key.first, key.second, score});
  return out;
}

}  // namespace bpcheck
