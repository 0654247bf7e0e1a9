#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tsclean/frame.hpp"

namespace tsclean {

enum class TimestampFormat { Int, Iso8601 };

TimestampFormat timestamp_format_from_string(const std::string& s);

/// Observed series before regularization: timestamps may repeat or leave gaps.
struct RawFrame {
    std::vector<std::string> names;
    std::vector<std::int64_t> timestamps;
    std::vector<std::vector<Cell>> rows;

    std::size_t size() const { return rows.size(); }
    bool operator==(const RawFrame&) const = default;
};

struct CsvOptions {
    TimestampFormat timestamp_format = TimestampFormat::Int;
};

/// Seconds since the Unix epoch for "YYYY-MM-DD[THH:MM[:SS]][Z]".
std::int64_t parse_iso8601(const std::string& text);

RawFrame read_csv(const std::string& path, const CsvOptions& options = {});
RawFrame parse_csv(const std::string& text, const CsvOptions& options = {});

struct DedupResult {
    RawFrame frame;
    std::size_t duplicates_removed = 0;
};

/// Keeps the first row of every run of equal timestamps.
DedupResult deduplicate(const RawFrame& raw);

struct RegularizeResult {
    TimeSeriesFrame frame;
    std::int64_t interval = 1;
    std::size_t inserted_rows = 0;
    std::vector<std::string> warnings;
};

/// Sampling interval: mode of adjacent differences, smallest on ties.
std::int64_t sampling_interval(const std::vector<std::int64_t>& timestamps);

/// Aligns a strictly increasing RawFrame to the regular grid [t_first, t_last] at
/// the sampling interval. Absent ticks become all-Missing rows.
RegularizeResult regularize(const RawFrame& raw);

struct PreprocessResult {
    TimeSeriesFrame frame;
    std::size_t duplicates_removed = 0;
    std::size_t inserted_rows = 0;
    std::vector<std::string> warnings;
};

/// deduplicate, regularize, then validate (throws DataError on an invalid result).
PreprocessResult preprocess(const RawFrame& raw);

void write_csv(const TimeSeriesFrame& frame, const std::string& path);
void write_csv(const RawFrame& raw, const std::string& path);
std::string to_csv(const TimeSeriesFrame& frame);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace tsclean
