#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "bpcheck/backend.hpp"
#include "bpcheck/pipeline.hpp"

namespace bpcheck {

using ExpectedPair = std::pair<std::size_t, std::string>;  // (offset, url)

struct EvalCase {
  std::string example_id;
  std::set<ExpectedPair> expected;
  std::vector<ViolationPrediction> predicted;
};

struct CaseScore {
  std::size_t correct_kept = 0;
  std::size_t kept = 0;
  std::size_t expected_count = 0;

  CaseScore& operator+=(const CaseScore& o) {
    correct_kept += o.correct_kept;
    kept += o.kept;
    expected_count += o.expected_count;
    return *this;
  }
  bool operator==(const CaseScore&) const = default;
};

// Predictions are reduced to distinct (offset, url) pairs (max score) before
// counting. A kept prediction is correct when it matches an expected pair
// with the same URL and |offset delta| <= tolerance; each expected pair
// matches at most once. With `table`, each URL uses its own threshold and
// `t` is ignored.
CaseScore score_case(const EvalCase& c, double t, const ThresholdTable* table = nullptr,
                     std::size_t tolerance = 0);

// Precision/recall are nullopt when their denominator is zero.
struct PRPoint {
  double t = 0.0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::size_t kept_predictions = 0;
  std::size_t correct_kept = 0;
  std::size_t expected = 0;
};

std::vector<double> default_threshold_grid();  // 0.00, 0.01, ..., 1.00

// Throws ValidationError unless the grid is non-empty, ascending and in [0, 1].
void validate_grid(const std::vector<double>& grid);

// Recall denominator: total expected pairs over all cases.
std::vector<PRPoint> pr_curve(const std::vector<EvalCase>& cases, const std::vector<double>& grid,
                              std::size_t tolerance = 0);

struct CalibrationConfig {
  double target_precision = 0.9;
  std::size_t min_support = 5;
  std::vector<double> threshold_grid = default_threshold_grid();
  std::size_t tolerance = 0;
};

struct UrlCalibration {
  std::string url;
  std::size_t support = 0;            // distinct predictions for the URL
  std::optional<double> threshold;    // unset when under min_support
  std::optional<double> precision;    // at the chosen threshold
  bool suppress_recommended = false;  // no grid point reached the target
};

struct CalibrationReport {
  double default_t = 1.0;
  std::optional<double> default_precision;
  std::vector<UrlCalibration> urls;  // sorted by URL
};

struct PerUrlCount {
  std::size_t kept = 0;
  std::size_t correct = 0;
  std::optional<double> precision() const {
    if (kept == 0) return std::nullopt;
    return static_cast<double>(correct) / static_cast<double>(kept);
  }
};

// Per-URL kept/correct counts when each URL is thresholded via `table`.
std::map<std::string, PerUrlCount> per_url_precision(const std::vector<EvalCase>& cases,
                                                     const ThresholdTable& table,
                                                     std::size_t tolerance = 0);

// For every URL with >= min_support predictions: smallest grid t whose
// precision reaches the target, else 1.0 plus a suppression recommendation.
// The default threshold is the smallest grid t reaching the target over all
// predictions (1.0 if none does). Throws ValidationError on a bad grid.
std::pair<ThresholdTable, CalibrationReport> fit_per_url_thresholds(
    const std::vector<EvalCase>& cases, const CalibrationConfig& config);

struct RankedRun {
  std::string label;
  std::optional<double> precision;  // at the reference threshold
  std::optional<double> recall;
  std::vector<PRPoint> curve;
};

// Precision at reference_t (undefined ranks last), then recall, then label.
std::vector<RankedRun> compare_runs(
    const std::vector<std::pair<std::string, std::vector<EvalCase>>>& runs, double reference_t,
    const std::vector<double>& grid = default_threshold_grid());

// Newline-delimited {example_id, expected: [{offset,url}], predicted:
// [{offset,url,score}]}. Throws ParseError with the 1-based line number.
std::vector<EvalCase> read_eval_cases(std::istream& in);

}  // namespace bpcheck
