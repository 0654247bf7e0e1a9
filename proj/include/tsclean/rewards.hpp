#pragma once

#include <array>
#include <cstddef>
#include <deque>

#include "tsclean/frame.hpp"
#include "tsclean/serialize.hpp"

namespace tsclean {

struct RewardWeights {
    std::array<double, 4> mu{0.2, 0.2, 0.2, 0.4};  // structure, distance, local, lite
    std::array<double, 3> lambda{0.4, 0.5, 0.1};   // low_total, quality, cost
    double penalty = 5.0;
    double improvement_threshold = 0.01;

    void validate() const;
    bool operator==(const RewardWeights&) const = default;
};

void to_json(json& j, const RewardWeights& w);
void from_json(const json& j, RewardWeights& w);

inline constexpr double kRateEpsilon = 1e-9;

/// 1 - mean over variables of (mean |second difference| / observed range), clamped to [0, 1].
double structure_score(const TimeSeriesFrame& frame);
/// RMS over co-numeric cells of (pre - post) / range_pre of the variable, clamped to [0, 1].
double distance_score(const TimeSeriesFrame& pre, const TimeSeriesFrame& post);

double low_total_of(double structure, double distance, double local, double lite, const RewardWeights& w);
double high_total_of(double low_total, double quality, double cost, double penalty, const RewardWeights& w);

RewardBreakdown low_dense(const TimeSeriesFrame& pre, const TimeSeriesFrame& post, const QualityRates& pre_rates,
                          const QualityRates& post_rates, IssueCategory target, double lite_delta,
                          const RewardWeights& w);

/// Adds quality, cost, penalty and high_total to a low-level breakdown.
/// `cost` is already normalized (about 1 for a typical lite evaluation).
RewardBreakdown high_dense(const RewardBreakdown& low, const QualityRates& pre_rates, const QualityRates& post_rates,
                           double cost, bool stagnation, const RewardWeights& w);

/// Gain of a step over doing nothing: a no-op still earns mu1 * structure(pre).
double improvement(const RewardBreakdown& low, double structure_pre, const RewardWeights& w);

struct ActionRecord {
    int high = 0;  // category index
    int low = 0;   // operator index within the category
    bool improved = false;
};

/// True iff the last three records share one (high, low) pair and none improved.
bool stagnation_check(const std::deque<ActionRecord>& history);

}  // namespace tsclean
