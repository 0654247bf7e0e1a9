#include "tsclean/anomaly.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tsclean/stats.hpp"

namespace tsclean {

namespace {

constexpr std::size_t kRollingWindow = 15;
constexpr std::size_t kHampelWindow = 7;

const char* kind_name(DetectorKind k) {
    switch (k) {
        case DetectorKind::ZScoreGlobal: return "zscore_global";
        case DetectorKind::MADGlobal: return "mad_global";
        case DetectorKind::IQRGlobal: return "iqr_global";
        case DetectorKind::RollingZScore: return "rolling_zscore";
        case DetectorKind::HampelFlag: return "hampel";
        case DetectorKind::DiffSpike: return "diff_spike";
    }
    return "?";
}

// Conventional cut-offs for each detector's standardized deviation. Raw
// scores are the saturated excess over the gate, so ordinary variation scores
// exactly 0; min-max scaling of ungated scores would push the top cells of any
// clean series up to 1.
double gate_for(DetectorKind k) {
    switch (k) {
        case DetectorKind::ZScoreGlobal: return 2.0;  // the outlier inflates the global std
        case DetectorKind::IQRGlobal: return 1.5;     // Tukey fences
        default: return 3.0;
    }
}

double gated(double s, double gate) { return s > gate ? 1.0 - std::exp(-(s - gate)) : 0.0; }

// Guards divisions by a spread estimate that may be zero.
double safe_scale(double s, double fallback) {
    if (s > 0.0) return s;
    if (fallback > 0.0) return fallback * 1e-6;
    return 1e-12;
}

// Observed values within the centered window around t, excluding t itself.
std::vector<double> neighbourhood(const TimeSeriesFrame& f, std::size_t t, std::size_t d, std::size_t window) {
    const std::size_t half = window / 2;
    const std::size_t lo = t >= half ? t - half : 0;
    const std::size_t hi = std::min(f.rows() - 1, t + half);
    std::vector<double> out;
    out.reserve(window);
    for (std::size_t i = lo; i <= hi; ++i)
        if (i != t && !f.missing(i, d)) out.push_back(f.value(i, d));
    return out;
}

double autocorrelation(const std::vector<Cell>& col, double mean, double denom, std::size_t lag) {
    double num = 0.0;
    for (std::size_t t = 0; t + lag < col.size(); ++t)
        if (col[t] && col[t + lag]) num += (*col[t] - mean) * (*col[t + lag] - mean);
    return num / denom;
}

}  // namespace

std::string DetectorId::name() const {
    std::string n = kind_name(kind);
    if (kind == DetectorKind::RollingZScore || kind == DetectorKind::HampelFlag) n += "(" + std::to_string(window) + ")";
    return n;
}

DetectorId DetectorId::parse(const std::string& name) {
    const auto open = name.find('(');
    const std::string base = name.substr(0, open);
    std::size_t window = 0;
    if (open != std::string::npos) window = std::stoul(name.substr(open + 1));
    for (auto k : {DetectorKind::ZScoreGlobal, DetectorKind::MADGlobal, DetectorKind::IQRGlobal,
                   DetectorKind::RollingZScore, DetectorKind::HampelFlag, DetectorKind::DiffSpike}) {
        if (base == kind_name(k)) {
            DetectorId id{k, window};
            if ((k == DetectorKind::RollingZScore || k == DetectorKind::HampelFlag) && window == 0)
                throw std::invalid_argument("detector '" + name + "' needs a positive window");
            return id;
        }
    }
    throw std::invalid_argument("unknown detector '" + name + "'");
}

std::vector<DetectorId> detector_pool() {
    return {{DetectorKind::ZScoreGlobal, 0},
            {DetectorKind::MADGlobal, 0},
            {DetectorKind::IQRGlobal, 0},
            {DetectorKind::RollingZScore, kRollingWindow},
            {DetectorKind::HampelFlag, kHampelWindow},
            {DetectorKind::DiffSpike, 0}};
}

MetaFeatures meta_features(const TimeSeriesFrame& frame) {
    MetaFeatures m;
    m.missing_frac = static_cast<double>(frame.missing_count()) / static_cast<double>(cell_count(frame));
    std::size_t used = 0;
    double trend = 0.0, season = 0.0, stationarity = 0.0, kurt = 0.0;
    for (std::size_t d = 0; d < frame.cols(); ++d) {
        std::vector<double> xs, ts;
        for (std::size_t t = 0; t < frame.rows(); ++t) {
            if (frame.missing(t, d)) continue;
            xs.push_back(frame.value(t, d));
            ts.push_back(static_cast<double>(t));
        }
        if (xs.empty()) continue;
        ++used;
        trend += std::abs(stats::pearson(xs, ts));
        kurt += stats::excess_kurtosis(xs);

        const double var = stats::variance(xs);
        const auto diffs = [&] {
            std::vector<double> out;
            for (std::size_t t = 1; t < frame.rows(); ++t)
                if (!frame.missing(t, d) && !frame.missing(t - 1, d)) out.push_back(frame.value(t, d) - frame.value(t - 1, d));
            return out;
        }();
        if (var > 0.0) stationarity += stats::variance(diffs) / var;

        const auto col = frame.column(d);
        const double mean = stats::mean(xs);
        double denom = 0.0;
        for (double x : xs) denom += (x - mean) * (x - mean);
        double best = 0.0;
        if (denom > 0.0) {
            for (std::size_t lag = 2; lag <= frame.rows() / 2; ++lag) best = std::max(best, autocorrelation(col, mean, denom, lag));
        }
        season += best;
    }
    if (used == 0) throw DataError("every variable is entirely Missing");
    const double n = static_cast<double>(used);
    m.trend_strength = trend / n;
    m.seasonality_strength = season / n;
    m.stationarity_ratio = stationarity / n;
    m.kurtosis = kurt / n;
    return m;
}

std::vector<DetectorId> select_detectors(const MetaFeatures& meta, std::size_t k) {
    if (k == 0) throw std::invalid_argument("k must be at least 1");
    const auto pool = detector_pool();
    std::vector<DetectorKind> lead;
    if (meta.kurtosis > 1.0) {
        lead.push_back(DetectorKind::MADGlobal);
        lead.push_back(DetectorKind::HampelFlag);
    }
    if (meta.trend_strength > 0.5) {
        lead.push_back(DetectorKind::RollingZScore);
        lead.push_back(DetectorKind::DiffSpike);
    }
    if (lead.empty()) {
        lead.push_back(DetectorKind::ZScoreGlobal);
        lead.push_back(DetectorKind::IQRGlobal);
    }
    std::vector<DetectorId> ranked;
    for (auto kind : lead)
        for (const auto& id : pool)
            if (id.kind == kind) ranked.push_back(id);
    for (const auto& id : pool)
        if (std::find(ranked.begin(), ranked.end(), id) == ranked.end()) ranked.push_back(id);
    ranked.resize(std::min(k, ranked.size()));
    return ranked;
}

ScoreMatrix raw_scores(const TimeSeriesFrame& frame, const DetectorId& detector) {
    ScoreMatrix out(frame.rows(), frame.cols());
    for (std::size_t d = 0; d < frame.cols(); ++d) {
        const auto xs = stats::observed(frame, d);
        if (xs.size() < 2) continue;
        const double sd = stats::stddev(xs);
        const double gate = gate_for(detector.kind);
        switch (detector.kind) {
            case DetectorKind::ZScoreGlobal: {
                const double m = stats::mean(xs);
                const double s = safe_scale(sd, 0.0);
                for (std::size_t t = 0; t < frame.rows(); ++t)
                    if (!frame.missing(t, d)) out.at(t, d) = gated(std::abs(frame.value(t, d) - m) / s, gate);
                break;
            }
            case DetectorKind::MADGlobal: {
                const double med = stats::median(xs);
                const double s = safe_scale(stats::kMadScale * stats::mad(xs), sd);
                for (std::size_t t = 0; t < frame.rows(); ++t)
                    if (!frame.missing(t, d)) out.at(t, d) = gated(std::abs(frame.value(t, d) - med) / s, gate);
                break;
            }
            case DetectorKind::IQRGlobal: {
                const double q1 = stats::quantile(xs, 0.25);
                const double q3 = stats::quantile(xs, 0.75);
                const double s = safe_scale(q3 - q1, sd);
                for (std::size_t t = 0; t < frame.rows(); ++t) {
                    if (frame.missing(t, d)) continue;
                    const double x = frame.value(t, d);
                    out.at(t, d) = gated(std::max({0.0, q1 - x, x - q3}) / s, gate);
                }
                break;
            }
            case DetectorKind::RollingZScore: {
                for (std::size_t t = 0; t < frame.rows(); ++t) {
                    if (frame.missing(t, d)) continue;
                    const auto nb = neighbourhood(frame, t, d, detector.window);
                    if (nb.size() < 2) continue;
                    const double s = safe_scale(stats::stddev(nb), sd);
                    out.at(t, d) = gated(std::abs(frame.value(t, d) - stats::mean(nb)) / s, gate);
                }
                break;
            }
            case DetectorKind::HampelFlag: {
                for (std::size_t t = 0; t < frame.rows(); ++t) {
                    if (frame.missing(t, d)) continue;
                    auto nb = neighbourhood(frame, t, d, detector.window);
                    if (nb.size() < 2) continue;
                    const double med = stats::median(nb);
                    const double s = safe_scale(stats::kMadScale * stats::mad(nb), sd);
                    out.at(t, d) = gated(std::abs(frame.value(t, d) - med) / s, gate);
                }
                break;
            }
            case DetectorKind::DiffSpike: {
                std::vector<double> diffs;
                for (std::size_t t = 1; t < frame.rows(); ++t)
                    if (!frame.missing(t, d) && !frame.missing(t - 1, d))
                        diffs.push_back(frame.value(t, d) - frame.value(t - 1, d));
                if (diffs.size() < 2) break;
                const double s = safe_scale(stats::kMadScale * stats::mad(diffs), stats::stddev(diffs));
                for (std::size_t t = 0; t < frame.rows(); ++t) {
                    if (frame.missing(t, d)) continue;
                    const double x = frame.value(t, d);
                    double best = -1.0;
                    if (t > 0 && !frame.missing(t - 1, d)) best = std::abs(x - frame.value(t - 1, d));
                    if (t + 1 < frame.rows() && !frame.missing(t + 1, d)) {
                        const double r = std::abs(x - frame.value(t + 1, d));
                        best = best < 0.0 ? r : std::min(best, r);
                    }
                    if (best > 0.0) out.at(t, d) = gated(best / s, gate);
                }
                break;
            }
        }
    }
    return out;
}

ScoreMatrix score(const TimeSeriesFrame& frame, const std::vector<DetectorId>& detectors) {
    if (detectors.empty()) throw std::invalid_argument("at least one detector required");
    ScoreMatrix fused(frame.rows(), frame.cols());
    for (const auto& det : detectors) {
        const auto raw = raw_scores(frame, det);
        double lo = 0.0, hi = 0.0;
        bool any = false;
        for (std::size_t t = 0; t < frame.rows(); ++t)
            for (std::size_t d = 0; d < frame.cols(); ++d) {
                if (frame.missing(t, d)) continue;
                const double v = raw.at(t, d);
                if (!any) {
                    lo = hi = v;
                    any = true;
                } else {
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
            }
        if (!any || hi <= lo) continue;  // constant score vector maps to zeros
        for (std::size_t t = 0; t < frame.rows(); ++t)
            for (std::size_t d = 0; d < frame.cols(); ++d)
                if (!frame.missing(t, d)) fused.at(t, d) += (raw.at(t, d) - lo) / (hi - lo);
    }
    const double n = static_cast<double>(detectors.size());
    for (double& v : fused.values) v = std::clamp(v / n, 0.0, 1.0);
    return fused;
}

CellMask flag(const ScoreMatrix& scores, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) throw std::invalid_argument("threshold must lie in (0, 1)");
    CellMask mask(scores.rows, scores.cols);
    for (std::size_t t = 0; t < scores.rows; ++t)
        for (std::size_t d = 0; d < scores.cols; ++d)
            if (scores.at(t, d) > threshold) mask.set(t, d);
    return mask;
}

}  // namespace tsclean
