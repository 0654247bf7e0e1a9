#include "tsclean/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace tsclean {

TimestampFormat timestamp_format_from_string(const std::string& s) {
    if (s == "int") return TimestampFormat::Int;
    if (s == "iso8601") return TimestampFormat::Iso8601;
    throw std::invalid_argument("unknown timestamp format '" + s + "'");
}

std::int64_t parse_iso8601(const std::string& text) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    const int n = std::sscanf(text.c_str(), "%d-%d-%d%*1[T ]%d:%d:%d", &y, &mo, &d, &h, &mi, &s);
    if (n != 3 && n != 5 && n != 6) throw std::invalid_argument("not an ISO-8601 timestamp: '" + text + "'");
    using namespace std::chrono;
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 || s > 60) {
        throw std::invalid_argument("invalid ISO-8601 timestamp: '" + text + "'");
    }
    const auto tp = sys_days{ymd} + hours{h} + minutes{mi} + seconds{s};
    return duration_cast<seconds>(tp.time_since_epoch()).count();
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

std::int64_t parse_timestamp(const std::string& text, TimestampFormat fmt, std::size_t row) {
    if (fmt == TimestampFormat::Iso8601) {
        try {
            return parse_iso8601(text);
        } catch (const std::invalid_argument& e) {
            throw DataError(e.what(), row, 0);
        }
    }
    std::int64_t v = 0;
    const auto* end = text.data() + text.size();
    auto [p, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || p != end) throw DataError("unparseable timestamp '" + text + "'", row, 0);
    return v;
}

Cell parse_cell(const std::string& text, std::size_t row, std::size_t col) {
    if (text.empty()) return std::nullopt;
    double v = 0.0;
    const char* begin = text.data();
    if (*begin == '+') ++begin;
    const auto* end = text.data() + text.size();
    auto [p, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || p != end) throw DataError("unparseable cell '" + text + "'", row, col);
    if (!std::isfinite(v)) throw DataError("non-finite cell '" + text + "'", row, col);
    return v;
}

}  // namespace

RawFrame parse_csv(const std::string& text, const CsvOptions& options) {
    std::istringstream in(text);
    std::string line;
    RawFrame raw;
    if (!std::getline(in, line)) throw DataError("empty file: header row required");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    auto header = split_line(line);
    if (header.size() < 2) throw DataError("header needs a timestamp column and at least one variable");
    raw.names.assign(header.begin() + 1, header.end());
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto fields = split_line(line);
        if (fields.size() != header.size()) {
            throw DataError("expected " + std::to_string(header.size()) + " fields, found " +
                                std::to_string(fields.size()),
                            row);
        }
        const auto ts = parse_timestamp(fields[0], options.timestamp_format, row);
        if (!raw.timestamps.empty() && ts < raw.timestamps.back()) throw DataError("unsorted timestamps", row, 0);
        std::vector<Cell> cells;
        cells.reserve(raw.names.size());
        for (std::size_t c = 1; c < fields.size(); ++c) cells.push_back(parse_cell(fields[c], row, c));
        raw.timestamps.push_back(ts);
        raw.rows.push_back(std::move(cells));
        ++row;
    }
    if (raw.rows.size() < 2) throw DataError("at least 2 rows required");
    return raw;
}

RawFrame read_csv(const std::string& path, const CsvOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), options);
}

DedupResult deduplicate(const RawFrame& raw) {
    DedupResult out;
    out.frame.names = raw.names;
    for (std::size_t i = 0; i < raw.rows.size(); ++i) {
        if (!out.frame.timestamps.empty() && raw.timestamps[i] == out.frame.timestamps.back()) {
            ++out.duplicates_removed;
            continue;
        }
        out.frame.timestamps.push_back(raw.timestamps[i]);
        out.frame.rows.push_back(raw.rows[i]);
    }
    return out;
}

std::int64_t sampling_interval(const std::vector<std::int64_t>& timestamps) {
    std::map<std::int64_t, std::size_t> counts;
    for (std::size_t i = 1; i < timestamps.size(); ++i) ++counts[timestamps[i] - timestamps[i - 1]];
    if (counts.empty()) throw DataError("at least 2 rows required");
    std::int64_t best = counts.begin()->first;
    std::size_t best_count = 0;
    // Ascending key order, strict '>' keeps the smallest difference on ties.
    for (const auto& [diff, n] : counts) {
        if (n > best_count) {
            best = diff;
            best_count = n;
        }
    }
    if (best <= 0) throw DataError("timestamps must be strictly increasing before regularization");
    return best;
}

RegularizeResult regularize(const RawFrame& raw) {
    if (raw.rows.size() < 2) throw DataError("at least 2 rows required");
    for (std::size_t i = 1; i < raw.timestamps.size(); ++i) {
        if (raw.timestamps[i] <= raw.timestamps[i - 1]) throw DataError("non-strict timestamps", i, 0);
    }
    RegularizeResult out;
    const std::int64_t step = sampling_interval(raw.timestamps);
    const std::int64_t t0 = raw.timestamps.front();
    out.interval = step;

    auto snap = [&](std::int64_t ts) -> std::int64_t {
        const std::int64_t offset = ts - t0;
        const std::int64_t q = offset / step;
        const std::int64_t r = offset % step;
        return (2 * r > step) ? q + 1 : q;  // exact half rounds down
    };

    const auto ticks = static_cast<std::size_t>(snap(raw.timestamps.back()) + 1);
    std::vector<std::vector<Cell>> grid(ticks, std::vector<Cell>(raw.names.size()));
    std::vector<bool> filled(ticks, false);
    for (std::size_t i = 0; i < raw.rows.size(); ++i) {
        const std::int64_t ts = raw.timestamps[i];
        const auto tick = static_cast<std::size_t>(snap(ts));
        if ((ts - t0) % step != 0) {
            out.warnings.push_back("off-grid timestamp " + std::to_string(ts) + " snapped to " +
                                   std::to_string(t0 + static_cast<std::int64_t>(tick) * step));
        }
        if (filled[tick]) {
            out.warnings.push_back("timestamp " + std::to_string(ts) + " collides with an earlier row; dropped");
            continue;
        }
        grid[tick] = raw.rows[i];
        filled[tick] = true;
    }
    out.inserted_rows = static_cast<std::size_t>(std::count(filled.begin(), filled.end(), false));
    out.frame = TimeSeriesFrame(raw.names, std::move(grid), t0, step);
    return out;
}

PreprocessResult preprocess(const RawFrame& raw) {
    auto dedup = deduplicate(raw);
    if (dedup.frame.rows.size() < 2) throw DataError("at least 2 rows required after deduplication");
    auto reg = regularize(dedup.frame);
    auto problems = validate_frame(reg.frame);
    if (!problems.empty()) throw DataError(problems.front().message, problems.front().row, problems.front().col);
    return {std::move(reg.frame), dedup.duplicates_removed, reg.inserted_rows, std::move(reg.warnings)};
}

std::string format_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw std::runtime_error("cannot format number");
    return std::string(buf, p);
}

namespace {

void write_text(const std::string& text, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path);
}

void append_header(std::string& s, const std::vector<std::string>& names) {
    s += "timestamp";
    for (const auto& n : names) {
        s += ',';
        s += n;
    }
    s += '\n';
}

void append_row(std::string& s, std::int64_t ts, const std::vector<Cell>& cells) {
    s += std::to_string(ts);
    for (const auto& c : cells) {
        s += ',';
        if (c) s += format_double(*c);
    }
    s += '\n';
}

}  // namespace

std::string to_csv(const TimeSeriesFrame& frame) {
    std::string s;
    append_header(s, frame.names());
    std::vector<Cell> row(frame.cols());
    for (std::size_t t = 0; t < frame.rows(); ++t) {
        for (std::size_t d = 0; d < frame.cols(); ++d) row[d] = frame.at(t, d);
        append_row(s, frame.wall_time(t), row);
    }
    return s;
}

void write_csv(const TimeSeriesFrame& frame, const std::string& path) { write_text(to_csv(frame), path); }

void write_csv(const RawFrame& raw, const std::string& path) {
    std::string s;
    append_header(s, raw.names);
    for (std::size_t i = 0; i < raw.rows.size(); ++i) append_row(s, raw.timestamps[i], raw.rows[i]);
    write_text(s, path);
}

}  // namespace tsclean
