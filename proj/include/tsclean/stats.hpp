#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "tsclean/frame.hpp"

namespace tsclean::stats {

/// Scale factor turning a median absolute deviation into a normal-consistent sigma.
inline constexpr double kMadScale = 1.48;

double mean(std::span<const double> xs);
/// Sample variance (n - 1 denominator); 0 for fewer than two values.
double variance(std::span<const double> xs);
/// Population variance (n denominator).
double pvariance(std::span<const double> xs);
double stddev(std::span<const double> xs);
double median(std::vector<double> xs);
/// Quantile by linear interpolation between order statistics (q in [0,1]).
double quantile(std::vector<double> xs, double q);
double mad(std::span<const double> xs);
double pearson(std::span<const double> xs, std::span<const double> ys);
double skewness(std::span<const double> xs);
double excess_kurtosis(std::span<const double> xs);

/// Non-missing values of a column, in row order.
std::vector<double> observed(const std::vector<Cell>& column);
std::vector<double> observed(const TimeSeriesFrame& frame, std::size_t d);

struct Range {
    double lo = 0.0;
    double hi = 0.0;
    double width() const { return hi - lo; }
};
std::optional<Range> observed_range(const TimeSeriesFrame& frame, std::size_t d);

}  // namespace tsclean::stats
