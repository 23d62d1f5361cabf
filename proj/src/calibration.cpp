#include "bpcheck/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bpcheck/errors.hpp"
#include "bpcheck/serialization.hpp"

namespace bpcheck {
namespace {

struct ScoredPair {
  std::size_t offset;
  std::string url;
  double score;
};

// Distinct (offset, url) pairs with their best score, sorted by (url, offset).
std::vector<ScoredPair> distinct_predictions(const EvalCase& c) {
  std::map<std::pair<std::string, std::size_t>, double> best;
  for (const auto& p : c.predicted) {
    auto [it, inserted] = best.try_emplace({p.url, p.offset}, p.score);
    if (!inserted) it->second = std::max(it->second, p.score);
  }
  std::vector<ScoredPair> out;
  out.reserve(best.size());
  for (const auto& [key, score] : best) out.push_back({key.second, key.first, score});
  return out;
}

// Correct flags for `kept` (sorted by url, offset). One-to-one matching per
// URL; each kept pair takes the nearest unused expected pair within tolerance.
std::vector<bool> match(const std::vector<const ScoredPair*>& kept,
                        const std::set<ExpectedPair>& expected, std::size_t tolerance) {
  std::vector<bool> correct(kept.size(), false);
  if (tolerance == 0) {
    for (std::size_t i = 0; i < kept.size(); ++i) {
      correct[i] = expected.contains({kept[i]->offset, kept[i]->url});
    }
    return correct;
  }
  std::set<ExpectedPair> unused = expected;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const auto& p = *kept[i];
    const std::size_t lo = p.offset >= tolerance ? p.offset - tolerance : 0;
    const std::size_t hi = p.offset + tolerance;
    auto best = unused.end();
    std::size_t best_dist = 0;
    for (auto it = unused.begin(); it != unused.end(); ++it) {
      if (it->second != p.url || it->first < lo || it->first > hi) continue;
      const std::size_t dist = it->first > p.offset ? it->first - p.offset : p.offset - it->first;
      if (best == unused.end() || dist < best_dist) {
        best = it;
        best_dist = dist;
      }
    }
    if (best != unused.end()) {
      correct[i] = true;
      unused.erase(best);
    }
  }
  return correct;
}

template <typename ThresholdFn>
void tally(const EvalCase& c, ThresholdFn&& threshold, std::size_t tolerance,
           std::map<std::string, PerUrlCount>* per_url, CaseScore* total) {
  const auto preds = distinct_predictions(c);
  std::vector<const ScoredPair*> kept;
  for (const auto& p : preds) {
    if (p.score > threshold(p.url)) kept.push_back(&p);
  }
  const auto correct = match(kept, c.expected, tolerance);
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (per_url != nullptr) {
      auto& slot = (*per_url)[kept[i]->url];
      ++slot.kept;
      if (correct[i]) ++slot.correct;
    }
    if (total != nullptr) {
      ++total->kept;
      if (correct[i]) ++total->correct_kept;
    }
  }
  if (total != nullptr) total->expected_count += c.expected.size();
}

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

CaseScore score_case(const EvalCase& c, double t, const ThresholdTable* table,
                     std::size_t tolerance) {
  CaseScore score;
  if (table != nullptr) {
    tally(c, [&](const std::string& url) { return table->threshold_for(url); }, tolerance, nullptr, &score);
  } else {
    tally(c, [&](const std::string&) { return t; }, tolerance, nullptr, &score);
  }
  return score;
}

std::vector<double> default_threshold_grid() {
  std::vector<double> grid;
  grid.reserve(101);
  for (int i = 0; i <= 100; ++i) grid.push_back(static_cast<double>(i) / 100.0);
  return grid;
}

void validate_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw ValidationError("threshold grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0 && grid[i] <= 1.0)) throw ValidationError("threshold grid value outside [0, 1]");
    if (i > 0 && grid[i] <= grid[i - 1]) throw ValidationError("threshold grid is not ascending");
  }
}

std::vector<PRPoint> pr_curve(const std::vector<EvalCase>& cases, const std::vector<double>& grid,
                              std::size_t tolerance) {
  validate_grid(grid);
  std::vector<PRPoint> curve;
  curve.reserve(grid.size());
  for (const double t : grid) {
    CaseScore sum;
    for (const auto& c : cases) sum += score_case(c, t, nullptr, tolerance);
    curve.push_back({t, ratio(sum.correct_kept, sum.kept), ratio(sum.correct_kept, sum.expected_count),
                     sum.kept, sum.correct_kept, sum.expected_count});
  }
  return curve;
}

std::map<std::string, PerUrlCount> per_url_precision(const std::vector<EvalCase>& cases,
                                                     const ThresholdTable& table,
                                                     std::size_t tolerance) {
  std::map<std::string, PerUrlCount> out;
  for (const auto& c : cases) {
    tally(c, [&](const std::string& url) { return table.threshold_for(url); }, tolerance, &out, nullptr);
  }
  return out;
}

std::pair<ThresholdTable, CalibrationReport> fit_per_url_thresholds(
    const std::vector<EvalCase>& cases, const CalibrationConfig& config) {
  validate_grid(config.threshold_grid);
  if (config.min_support < 1) throw ValidationError("min_support must be >= 1");

  std::map<std::string, std::size_t> support;
  for (const auto& c : cases) {
    for (const auto& p : distinct_predictions(c)) ++support[p.url];
  }

  // Per grid point: per-URL counts and the global tally at a uniform t.
  std::vector<std::map<std::string, PerUrlCount>> by_t(config.threshold_grid.size());
  std::vector<CaseScore> global(config.threshold_grid.size());
  for (std::size_t g = 0; g < config.threshold_grid.size(); ++g) {
    const double t = config.threshold_grid[g];
    for (const auto& c : cases) {
      tally(c, [t](const std::string&) { return t; }, config.tolerance, &by_t[g], &global[g]);
    }
  }

  ThresholdTable table;
  CalibrationReport report;
  table.default_t = 1.0;
  for (std::size_t g = 0; g < global.size(); ++g) {
    const auto p = ratio(global[g].correct_kept, global[g].kept);
    if (p && *p >= config.target_precision) {
      table.default_t = config.threshold_grid[g];
      report.default_precision = p;
      break;
    }
  }
  report.default_t = table.default_t;

  for (const auto& [url, n] : support) {
    UrlCalibration entry;
    entry.url = url;
    entry.support = n;
    if (n >= config.min_support) {
      for (std::size_t g = 0; g < by_t.size(); ++g) {
        const auto it = by_t[g].find(url);
        const auto p = it == by_t[g].end() ? std::nullopt : it->second.precision();
        if (p && *p >= config.target_precision) {
          entry.threshold = config.threshold_grid[g];
          entry.precision = p;
          break;
        }
      }
      if (!entry.threshold) {
        entry.threshold = 1.0;
        entry.suppress_recommended = true;
      }
      table.per_url[url] = *entry.threshold;
    }
    report.urls.push_back(std::move(entry));
  }
  return {std::move(table), std::move(report)};
}

std::vector<RankedRun> compare_runs(
    const std::vector<std::pair<std::string, std::vector<EvalCase>>>& runs, double reference_t,
    const std::vector<double>& grid) {
  std::vector<RankedRun> ranked;
  for (const auto& [label, cases] : runs) {
    const auto at_ref = pr_curve(cases, {reference_t}).front();
    ranked.push_back({label, at_ref.precision, at_ref.recall, pr_curve(cases, grid)});
  }
  // nullopt sorts below any value.
  const auto key = [](const std::optional<double>& v) { return v ? *v : -1.0; };
  std::sort(ranked.begin(), ranked.end(), [&](const RankedRun& a, const RankedRun& b) {
    if (key(a.precision) != key(b.precision)) return key(a.precision) > key(b.precision);
    if (key(a.recall) != key(b.recall)) return key(a.recall) > key(b.recall);
    return a.label < b.label;
  });
  return ranked;
}

std::vector<EvalCase> read_eval_cases(std::istream& in) {
  std::vector<EvalCase> cases;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      cases.push_back(json::parse(line).get<EvalCase>());
    } catch (const std::exception& e) {
      throw ParseError("eval case line " + std::to_string(lineno) + ": " + e.what(), lineno);
    }
  }
  return cases;
}

}  // namespace bpcheck
