#include "tsclean/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tsclean/stats.hpp"

namespace tsclean {

void RewardWeights::validate() const {
    for (double m : mu)
        if (!(m >= 0.0)) throw std::invalid_argument("reward weights must be nonnegative");
    for (double l : lambda)
        if (!(l >= 0.0)) throw std::invalid_argument("reward weights must be nonnegative");
    if (!(penalty >= 0.0)) throw std::invalid_argument("penalty must be nonnegative");
}

void to_json(json& j, const RewardWeights& w) {
    j = json{{"mu", w.mu}, {"lambda", w.lambda}, {"penalty", w.penalty}, {"improvement_threshold", w.improvement_threshold}};
}

void from_json(const json& j, RewardWeights& w) {
    w = RewardWeights{};
    if (j.contains("mu")) w.mu = j.at("mu").get<std::array<double, 4>>();
    if (j.contains("lambda")) w.lambda = j.at("lambda").get<std::array<double, 3>>();
    w.penalty = j.value("penalty", 5.0);
    w.improvement_threshold = j.value("improvement_threshold", 0.01);
    w.validate();
}

double structure_score(const TimeSeriesFrame& f) {
    double jerk = 0.0;
    std::size_t used = 0;
    for (std::size_t d = 0; d < f.cols(); ++d) {
        const auto range = stats::observed_range(f, d);
        if (!range || range->width() <= 0.0) continue;
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t t = 2; t < f.rows(); ++t) {
            if (f.missing(t, d) || f.missing(t - 1, d) || f.missing(t - 2, d)) continue;
            sum += std::abs(f.value(t, d) - 2.0 * f.value(t - 1, d) + f.value(t - 2, d));
            ++n;
        }
        if (n == 0) continue;
        jerk += sum / static_cast<double>(n) / range->width();
        ++used;
    }
    if (used == 0) return 1.0;
    return std::clamp(1.0 - jerk / static_cast<double>(used), 0.0, 1.0);
}

double distance_score(const TimeSeriesFrame& pre, const TimeSeriesFrame& post) {
    if (pre.rows() != post.rows() || pre.cols() != post.cols()) throw std::invalid_argument("frames differ in shape");
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t d = 0; d < pre.cols(); ++d) {
        const auto range = stats::observed_range(pre, d);
        const double width = range && range->width() > 0.0 ? range->width() : 1.0;
        for (std::size_t t = 0; t < pre.rows(); ++t) {
            if (pre.missing(t, d) || post.missing(t, d)) continue;
            const double z = (pre.value(t, d) - post.value(t, d)) / width;
            sum += z * z;
            ++n;
        }
    }
    if (n == 0) return 0.0;
    return std::clamp(std::sqrt(sum / static_cast<double>(n)), 0.0, 1.0);
}

double low_total_of(double structure, double distance, double local, double lite, const RewardWeights& w) {
    return w.mu[0] * structure - w.mu[1] * distance + w.mu[2] * local + w.mu[3] * lite;
}

double high_total_of(double low_total, double quality, double cost, double penalty, const RewardWeights& w) {
    return w.lambda[0] * low_total + w.lambda[1] * quality - w.lambda[2] * cost - penalty;
}

RewardBreakdown low_dense(const TimeSeriesFrame& pre, const TimeSeriesFrame& post, const QualityRates& pre_rates,
                          const QualityRates& post_rates, IssueCategory target, double lite_delta,
                          const RewardWeights& w) {
    RewardBreakdown r;
    r.structure = structure_score(post);
    r.distance = distance_score(pre, post);
    const double before = rate_of(pre_rates, target), after = rate_of(post_rates, target);
    r.local = std::max(0.0, before - after) / std::max(before, kRateEpsilon);
    r.lite = std::clamp(lite_delta, -1.0, 1.0);
    r.low_total = low_total_of(r.structure, r.distance, r.local, r.lite, w);
    return r;
}

RewardBreakdown high_dense(const RewardBreakdown& low, const QualityRates& pre_rates, const QualityRates& post_rates,
                           double cost, bool stagnation, const RewardWeights& w) {
    RewardBreakdown r = low;
    r.quality = std::max(0.0, pre_rates.total() - post_rates.total()) / std::max(pre_rates.total(), kRateEpsilon);
    r.cost = cost;
    r.penalty = stagnation ? w.penalty : 0.0;
    r.high_total = high_total_of(r.low_total, r.quality, r.cost, r.penalty, w);
    return r;
}

double improvement(const RewardBreakdown& low, double structure_pre, const RewardWeights& w) {
    return low.low_total - w.mu[0] * structure_pre;
}

bool stagnation_check(const std::deque<ActionRecord>& h) {
    if (h.size() < 3) return false;
    const auto& a = h[h.size() - 1];
    const auto& b = h[h.size() - 2];
    const auto& c = h[h.size() - 3];
    const bool same = a.high == b.high && b.high == c.high && a.low == b.low && b.low == c.low;
    return same && !a.improved && !b.improved && !c.improved;
}

}  // namespace tsclean
