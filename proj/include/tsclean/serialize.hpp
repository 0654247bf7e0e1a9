#pragma once

#include <json.hpp>

#include "tsclean/frame.hpp"

// JSON mappings for the core value types. nlohmann::json keeps object keys
// sorted, so dumps are byte-stable for identical values.
namespace tsclean {

using json = nlohmann::json;

void to_json(json& j, const CellMask& m);
void from_json(const json& j, CellMask& m);

void to_json(json& j, const TimeSeriesFrame& f);
void from_json(const json& j, TimeSeriesFrame& f);

void to_json(json& j, const QualityRates& r);
void from_json(const json& j, QualityRates& r);

void to_json(json& j, const TemporalConstraint& c);
void from_json(const json& j, TemporalConstraint& c);

void to_json(json& j, const PolyTerm& t);
void from_json(const json& j, PolyTerm& t);

void to_json(json& j, const CrossConstraint& c);
void from_json(const json& j, CrossConstraint& c);

void to_json(json& j, const ConstraintSet& s);
void from_json(const json& j, ConstraintSet& s);

json params_to_json(const ParamMap& p);
ParamMap params_from_json(const json& j);

void to_json(json& j, const OperatorDescriptor& o);
void from_json(const json& j, OperatorDescriptor& o);

void to_json(json& j, const RewardBreakdown& r);
void from_json(const json& j, RewardBreakdown& r);

void to_json(json& j, const PipelineStep& s);
void from_json(const json& j, PipelineStep& s);

void to_json(json& j, const EvaluationReport& r);
void from_json(const json& j, EvaluationReport& r);

/// Reads a whole JSON file; throws std::runtime_error naming the path on failure.
json read_json_file(const std::string& path);
void write_json_file(const json& j, const std::string& path);

}  // namespace tsclean
