#pragma once

// JSON mappings for the record types that cross file and wire boundaries.
// Decoding throws nlohmann::json exceptions or ValidationError on bad input.

#include <json.hpp>

#include "bpcheck/backend.hpp"
#include "bpcheck/calibration.hpp"
#include "bpcheck/corpus.hpp"
#include "bpcheck/pipeline.hpp"
#include "bpcheck/replay.hpp"

namespace bpcheck {

using nlohmann::json;

void to_json(json& j, const FileSnapshot& s);
void from_json(const json& j, FileSnapshot& s);

void to_json(json& j, const ReviewComment& c);
void from_json(const json& j, ReviewComment& c);

void to_json(json& j, const TrainingExample& e);
void from_json(const json& j, TrainingExample& e);

void to_json(json& j, const RelevantComment& rc);
void from_json(const json& j, RelevantComment& rc);

void to_json(json& j, const ViolationPrediction& p);
void from_json(const json& j, ViolationPrediction& p);

void to_json(json& j, const LineCol& lc);
void from_json(const json& j, LineCol& lc);

void to_json(json& j, const PostedComment& c);
void from_json(const json& j, PostedComment& c);

void to_json(json& j, const StageCounts& c);

void to_json(json& j, const EvalCase& c);
void from_json(const json& j, EvalCase& c);

void to_json(json& j, const PRPoint& p);
void to_json(json& j, const CalibrationReport& r);

void to_json(json& j, const ResultRecord& r);
void from_json(const json& j, ResultRecord& r);

void to_json(json& j, const FeedbackEvent& e);
void from_json(const json& j, FeedbackEvent& e);

void to_json(json& j, const ReplayReport& r);
void to_json(json& j, const UrlShare& s);
void to_json(json& j, const ResolutionReport& r);

void to_json(json& j, const ReviewFile& f);
void from_json(const json& j, ReviewFile& f);

void to_json(json& j, const SnapshotPair& p);
void from_json(const json& j, SnapshotPair& p);

// nullopt -> null.
json optional_number(const std::optional<double>& v);

}  // namespace bpcheck
