#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "tsclean/anomaly.hpp"
#include "tsclean/constraints.hpp"
#include "tsclean/frame.hpp"

namespace tsclean {

inline constexpr std::size_t kBins = 5;

struct QualityAssessment {
    QualityRates rates;
    CellMask missing;
    CellMask outlier;
    CellMask violation;
};

/// Fills in the detector list from the frame's meta-features when the config leaves it empty.
DetectorConfig resolve_detectors(const TimeSeriesFrame& frame, const DetectorConfig& config);

/// Missing / outlier / violation masks and their rates over T * D cells.
/// `detectors` must already be resolved (non-empty detector list).
QualityAssessment assess(const TimeSeriesFrame& frame, const ConstraintSet& constraints,
                         const DetectorConfig& detectors);

struct HighState {
    IssueCategory i_dom = IssueCategory::Missing;
    std::optional<IssueCategory> a_prev;  // nullopt = episode start
    int p_lite_bin = 0;
    int l_bin = 0;

    /// Canonical key, e.g. "d=M|p=S|q=2|l=0".
    std::string key() const;
    bool operator==(const HighState&) const = default;
};

struct LowState {
    IssueCategory g = IssueCategory::Missing;
    int skewness_bin = 0;
    int sparsity_bin = 0;
    int variance_bin = 0;
    int stationarity_bin = 0;

    std::string key() const;
    bool operator==(const LowState&) const = default;
};

/// Most severe issue; ties resolve M before O before C.
IssueCategory dominant_issue(const QualityRates& rates);

HighState high_state(const QualityRates& rates, std::optional<IssueCategory> a_prev, double p_lite, std::size_t step,
                     std::size_t l_max);

/// Bin helpers, exposed for tests. Each returns an index in [0, 4].
int uniform_bin(double x, double hi);
int skewness_bin(double skew);
int stationarity_bin(double ratio);

struct LowFeatures {
    double skewness = 0.0;
    double sparsity = 0.0;
    double variance = 0.0;  // per-variable variance / range^2, averaged
    double stationarity = 0.0;
};

/// Throws DataError when every variable is entirely Missing.
LowFeatures low_features(const TimeSeriesFrame& frame);
LowState low_state(const TimeSeriesFrame& frame, IssueCategory action);

}  // namespace tsclean
