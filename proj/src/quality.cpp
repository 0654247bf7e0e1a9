#include "tsclean/quality.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tsclean/stats.hpp"

namespace tsclean {

DetectorConfig resolve_detectors(const TimeSeriesFrame& frame, const DetectorConfig& config) {
    DetectorConfig out = config;
    if (out.detectors.empty()) out.detectors = select_detectors(meta_features(frame), config.k);
    return out;
}

QualityAssessment assess(const TimeSeriesFrame& frame, const ConstraintSet& constraints,
                         const DetectorConfig& detectors) {
    if (detectors.detectors.empty()) throw std::invalid_argument("detector list not resolved");
    QualityAssessment qa;
    qa.missing = frame.missing_mask();
    qa.outlier = flag(score(frame, detectors.detectors), detectors.threshold);
    qa.violation = check_violations(frame, constraints).mask;
    qa.rates = QualityRates::from_masks(qa.missing, qa.outlier, qa.violation);
    return qa;
}

std::string HighState::key() const {
    std::string k = "d=";
    k += category_letter(i_dom);
    k += "|p=";
    k += a_prev ? category_letter(*a_prev) : 'S';
    k += "|q=" + std::to_string(p_lite_bin) + "|l=" + std::to_string(l_bin);
    return k;
}

std::string LowState::key() const {
    std::string k = "g=";
    k += category_letter(g);
    k += "|s=" + std::to_string(skewness_bin) + "|m=" + std::to_string(sparsity_bin) + "|v=" +
         std::to_string(variance_bin) + "|r=" + std::to_string(stationarity_bin);
    return k;
}

IssueCategory dominant_issue(const QualityRates& rates) {
    IssueCategory best = IssueCategory::Missing;
    for (auto c : kAllCategories)
        if (rate_of(rates, c) > rate_of(rates, best)) best = c;
    return best;
}

int uniform_bin(double x, double hi) {
    const double b = std::floor(static_cast<double>(kBins) * x / hi);
    return static_cast<int>(std::clamp(b, 0.0, static_cast<double>(kBins - 1)));
}

namespace {

int cut_bin(double x, const double (&cuts)[4]) {
    int b = 0;
    for (double c : cuts)
        if (x >= c) ++b;
    return b;
}

}  // namespace

int skewness_bin(double skew) {
    static constexpr double cuts[4] = {-1.5, -0.5, 0.5, 1.5};
    return cut_bin(skew, cuts);
}

int stationarity_bin(double ratio) {
    static constexpr double cuts[4] = {0.5, 1.0, 1.5, 2.5};
    return cut_bin(ratio, cuts);
}

HighState high_state(const QualityRates& rates, std::optional<IssueCategory> a_prev, double p_lite, std::size_t step,
                     std::size_t l_max) {
    if (l_max == 0) throw std::invalid_argument("l_max must be at least 1");
    HighState s;
    s.i_dom = dominant_issue(rates);
    s.a_prev = a_prev;
    s.p_lite_bin = uniform_bin(std::clamp(p_lite, 0.0, 1.0), 1.0);
    s.l_bin = uniform_bin(static_cast<double>(std::min(step, l_max)) / static_cast<double>(l_max), 1.0);
    return s;
}

LowFeatures low_features(const TimeSeriesFrame& frame) {
    LowFeatures f;
    f.sparsity = static_cast<double>(frame.missing_count()) / static_cast<double>(cell_count(frame));
    std::size_t used = 0;
    for (std::size_t d = 0; d < frame.cols(); ++d) {
        const auto xs = stats::observed(frame, d);
        if (xs.empty()) continue;
        ++used;
        f.skewness += stats::skewness(xs);
        const double var = stats::variance(xs);
        const double width = stats::observed_range(frame, d)->width();
        if (width > 0.0) f.variance += var / (width * width);
        std::vector<double> diffs;
        for (std::size_t t = 1; t < frame.rows(); ++t)
            if (!frame.missing(t, d) && !frame.missing(t - 1, d)) diffs.push_back(frame.value(t, d) - frame.value(t - 1, d));
        if (var > 0.0) f.stationarity += stats::variance(diffs) / var;
    }
    if (used == 0) throw DataError("every variable is entirely Missing");
    const double n = static_cast<double>(used);
    f.skewness /= n;
    f.variance /= n;
    f.stationarity /= n;
    return f;
}

LowState low_state(const TimeSeriesFrame& frame, IssueCategory action) {
    const auto f = low_features(frame);
    LowState s;
    s.g = action;
    s.skewness_bin = skewness_bin(f.skewness);
    s.sparsity_bin = uniform_bin(f.sparsity, 1.0);
    s.variance_bin = uniform_bin(f.variance, 0.25);
    s.stationarity_bin = stationarity_bin(f.stationarity);
    return s;
}

}  // namespace tsclean
