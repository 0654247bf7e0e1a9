#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "tsclean/ingest.hpp"
#include "tsclean/trainer.hpp"

namespace tsclean {

struct SyntheticCorpus {
    TimeSeriesFrame frame;
    TaskSpec task;
};

/// Known ids: "forecast-sine-trend", "classify-shapes", "cluster-blobs".
/// Throws std::invalid_argument on anything else.
SyntheticCorpus make_synthetic(const std::string& id, std::uint64_t seed);
const std::vector<std::string>& synthetic_ids();

struct InjectionSpec {
    double duplicate_rate = 0.05;  // share of rows repeated in the raw output
    double missing_rate = 0.05;
    double point_outlier_rate = 0.05;
    double segment_outlier_rate = 0.05;
    std::size_t segment_min = 3;
    std::size_t segment_max = 8;
    double violation_rate = 0.05;
    double noise_sigma = 0.01;     // in units of each variable's standard deviation
    double affected_fraction = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
    bool operator==(const InjectionSpec&) const = default;
};

void to_json(json& j, const InjectionSpec& s);
void from_json(const json& j, InjectionSpec& s);

struct GroundTruthLedger {
    TimeSeriesFrame clean;
    CellMask missing;
    CellMask point_outlier;
    CellMask segment_outlier;
    CellMask violation;
    std::vector<std::size_t> duplicate_rows;  // rows of the clean grid repeated in the raw output
    double noise_sigma = 0.0;

    /// Union of the four cell-level corruption masks.
    CellMask corrupted() const;
    bool operator==(const GroundTruthLedger&) const = default;
};

void to_json(json& j, const GroundTruthLedger& l);
void from_json(const json& j, GroundTruthLedger& l);

struct InjectionResult {
    TimeSeriesFrame dirty;  // on the clean grid, duplicates already collapsed
    RawFrame raw;           // with duplicate rows, as written to disk
    GroundTruthLedger ledger;
};

/// Throws DataError("over-corruption") when the cell rates sum past 0.9.
InjectionResult inject(const TimeSeriesFrame& clean, const InjectionSpec& spec);

/// F1 of `flags` against the ledger cells, NMSE and RRA of `cleaned` over the
/// ledger cells. All three stay empty when the ledger has no corrupted cell.
EvaluationReport upstream_metrics(const TimeSeriesFrame& dirty, const TimeSeriesFrame& cleaned,
                                  const GroundTruthLedger& ledger, const CellMask& flags);

/// Applies operators in order, re-assessing the masks before each one.
TimeSeriesFrame apply_sequence(const Environment& env, const std::vector<OperatorDescriptor>& ops);

struct SamplingResult {
    std::vector<OperatorDescriptor> best;
    TimeSeriesFrame cleaned;
    double best_reward = 0.0;
    std::vector<double> rewards;  // sparse reward of every trial, in trial order
};

/// Random pipelines of length U{1..l_max} drawn uniformly from the whole
/// registry; keeps the one with the highest sparse reward.
SamplingResult sampling_baseline(const Environment& env, std::size_t l_max, std::uint64_t seed, std::size_t trials);

}  // namespace tsclean
