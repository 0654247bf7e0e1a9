#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "tsclean/frame.hpp"

namespace tsclean {

struct MinerConfig {
    double k_sigma = 3.0;
    std::size_t variance_window = 8;
    double corr_threshold = 0.6;
    double r2_threshold = 0.9;
    double residual_quantile = 0.995;
    double coeff_prune_eps = 1e-6;
    double mad_floor_frac = 0.01;

    /// Throws std::invalid_argument naming the first out-of-range field.
    void validate() const;
    bool operator==(const MinerConfig&) const = default;
};

/// Fewer valid transition samples than this and the variable gets no temporal constraint.
inline constexpr std::size_t kMinTemporalSupport = 8;

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// median(G) +- k * 1.48 * MAD(G). When the MAD is zero the interval is
/// median +- floor_halfwidth instead.
Interval robust_interval(std::span<const double> samples, double k, double floor_halfwidth);

/// Value of transition g at row t of variable d: first difference, second
/// difference, or sample variance of the window ending at t. Missing when any
/// participating cell is Missing or t is too early.
std::optional<double> transition_value(const TimeSeriesFrame& frame, std::size_t t, std::size_t d, TemporalKind kind,
                                       std::size_t window);

/// All valid transition values of one variable, in row order.
std::vector<double> transition_samples(const TimeSeriesFrame& frame, std::size_t d, TemporalKind kind,
                                       std::size_t window);

std::vector<TemporalConstraint> mine_temporal(const TimeSeriesFrame& frame, TemporalKind kind,
                                              const MinerConfig& config = {});

std::vector<CrossConstraint> mine_cross(const TimeSeriesFrame& frame, const MinerConfig& config = {});

/// Speed, acceleration and variance constraints plus cross-variable constraints.
ConstraintSet mine_constraints(const TimeSeriesFrame& frame, const MinerConfig& config = {});

struct ViolationReport {
    CellMask mask;
    std::vector<std::size_t> temporal_counts;  // per ConstraintSet::temporal entry
    std::vector<std::size_t> cross_counts;     // per ConstraintSet::cross entry
};

/// Temporal violations mark the last cell of the transition; cross violations
/// mark every cell of the row over V. Missing cells are never marked.
/// Throws DataError when the frame schema differs from the constraints'.
ViolationReport check_violations(const TimeSeriesFrame& frame, const ConstraintSet& constraints);

}  // namespace tsclean
