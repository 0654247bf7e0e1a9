#include "tsclean/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tsclean::stats {

double mean(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double variance(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean(xs);
    double acc = 0.0;
    for (double x : xs) acc += (x - m) * (x - m);
    return acc / static_cast<double>(xs.size() - 1);
}

double pvariance(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    const double m = mean(xs);
    double acc = 0.0;
    for (double x : xs) acc += (x - m) * (x - m);
    return acc / static_cast<double>(xs.size());
}

double stddev(std::span<const double> xs) { return std::sqrt(variance(xs)); }

double median(std::vector<double> xs) {
    if (xs.empty()) throw std::invalid_argument("median of empty set");
    const std::size_t n = xs.size();
    const std::size_t mid = n / 2;
    std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid), xs.end());
    const double hi = xs[mid];
    if (n % 2 == 1) return hi;
    const double lo = *std::max_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

double quantile(std::vector<double> xs, double q) {
    if (xs.empty()) throw std::invalid_argument("quantile of empty set");
    std::sort(xs.begin(), xs.end());
    q = std::clamp(q, 0.0, 1.0);
    const double pos = q * static_cast<double>(xs.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, xs.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return xs[lo] + frac * (xs[hi] - xs[lo]);
}

double mad(std::span<const double> xs) {
    std::vector<double> v(xs.begin(), xs.end());
    const double med = median(v);
    for (double& x : v) x = std::abs(x - med);
    return median(std::move(v));
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2) return 0.0;
    const double mx = mean(xs);
    const double my = mean(ys);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

double skewness(std::span<const double> xs) {
    if (xs.size() < 3) return 0.0;
    const double m = mean(xs);
    double m2 = 0.0, m3 = 0.0;
    for (double x : xs) {
        const double d = x - m;
        m2 += d * d;
        m3 += d * d * d;
    }
    const double n = static_cast<double>(xs.size());
    m2 /= n;
    m3 /= n;
    if (m2 <= 0.0) return 0.0;
    return m3 / std::pow(m2, 1.5);
}

double excess_kurtosis(std::span<const double> xs) {
    if (xs.size() < 4) return 0.0;
    const double m = mean(xs);
    double m2 = 0.0, m4 = 0.0;
    for (double x : xs) {
        const double d = x - m;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    const double n = static_cast<double>(xs.size());
    m2 /= n;
    m4 /= n;
    if (m2 <= 0.0) return 0.0;
    return m4 / (m2 * m2) - 3.0;
}

std::vector<double> observed(const std::vector<Cell>& column) {
    std::vector<double> out;
    out.reserve(column.size());
    for (const auto& c : column)
        if (c) out.push_back(*c);
    return out;
}

std::vector<double> observed(const TimeSeriesFrame& frame, std::size_t d) {
    std::vector<double> out;
    out.reserve(frame.rows());
    for (std::size_t t = 0; t < frame.rows(); ++t)
        if (!frame.missing(t, d)) out.push_back(frame.value(t, d));
    return out;
}

std::optional<Range> observed_range(const TimeSeriesFrame& frame, std::size_t d) {
    std::optional<Range> r;
    for (std::size_t t = 0; t < frame.rows(); ++t) {
        if (frame.missing(t, d)) continue;
        const double v = frame.value(t, d);
        if (!r) {
            r = Range{v, v};
        } else {
            r->lo = std::min(r->lo, v);
            r->hi = std::max(r->hi, v);
        }
    }
    return r;
}

}  // namespace tsclean::stats
