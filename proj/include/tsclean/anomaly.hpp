#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tsclean/frame.hpp"

namespace tsclean {

enum class DetectorKind { ZScoreGlobal, MADGlobal, IQRGlobal, RollingZScore, HampelFlag, DiffSpike };

struct DetectorId {
    DetectorKind kind = DetectorKind::ZScoreGlobal;
    std::size_t window = 0;  // RollingZScore / HampelFlag only, centered, odd

    std::string name() const;
    static DetectorId parse(const std::string& name);
    bool operator==(const DetectorId&) const = default;
};

/// Built-in pool in its fixed tie-break order.
std::vector<DetectorId> detector_pool();

struct MetaFeatures {
    double trend_strength = 0.0;
    double seasonality_strength = 0.0;
    double stationarity_ratio = 0.0;
    double missing_frac = 0.0;
    double kurtosis = 0.0;
};

/// Throws DataError when every variable is entirely Missing.
MetaFeatures meta_features(const TimeSeriesFrame& frame);

/// Rule table standing in for a learned selector:
/// heavy tails -> MAD/Hampel first, strong trend -> rolling/diff detectors,
/// otherwise the global z-score and IQR detectors lead.
std::vector<DetectorId> select_detectors(const MetaFeatures& meta, std::size_t k);

struct ScoreMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    ScoreMatrix() = default;
    ScoreMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}
    double at(std::size_t t, std::size_t d) const { return values[t * cols + d]; }
    double& at(std::size_t t, std::size_t d) { return values[t * cols + d]; }
};

/// Unnormalized detector output in [0, 1): the saturated excess of each cell's
/// standardized deviation over the detector's gate. Missing cells score 0.
ScoreMatrix raw_scores(const TimeSeriesFrame& frame, const DetectorId& detector);

/// Min-max normalizes each detector over non-Missing cells, then averages.
ScoreMatrix score(const TimeSeriesFrame& frame, const std::vector<DetectorId>& detectors);

/// Cells with score strictly above the threshold; threshold must lie in (0, 1).
CellMask flag(const ScoreMatrix& scores, double threshold);

struct DetectorConfig {
    std::size_t k = 3;
    double threshold = 0.8;
    /// When empty, detectors are chosen from the frame's meta-features.
    std::vector<DetectorId> detectors;
    bool operator==(const DetectorConfig&) const = default;
};

}  // namespace tsclean
