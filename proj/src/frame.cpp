#include "tsclean/frame.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tsclean {

DataError::DataError(const std::string& what, std::optional<std::size_t> row, std::optional<std::size_t> col)
    : std::runtime_error(what + (row ? " (row " + std::to_string(*row) + (col ? ", column " + std::to_string(*col) : "") + ")"
                                     : std::string())),
      row_(row),
      col_(col) {}

std::size_t CellMask::popcount() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

CellMask& CellMask::operator|=(const CellMask& other) {
    if (other.rows_ != rows_ || other.cols_ != cols_) {
        throw std::invalid_argument("mask shape mismatch");
    }
    for (std::size_t i = 0; i < bits_.size(); ++i) {
        bits_[i] = static_cast<std::uint8_t>(bits_[i] | other.bits_[i]);
    }
    return *this;
}

TimeSeriesFrame::TimeSeriesFrame(std::vector<std::string> names, std::size_t rows)
    : names_(std::move(names)), rows_(rows), cells_(rows * names_.size()) {}

TimeSeriesFrame::TimeSeriesFrame(std::vector<std::string> names, std::vector<std::vector<Cell>> rows,
                                 std::int64_t origin, std::int64_t step)
    : names_(std::move(names)), rows_(rows.size()), origin_(origin), step_(step) {
    cells_.reserve(rows_ * names_.size());
    for (std::size_t t = 0; t < rows.size(); ++t) {
        if (rows[t].size() != names_.size()) {
            throw std::invalid_argument("row " + std::to_string(t) + " has " + std::to_string(rows[t].size()) +
                                        " cells, expected " + std::to_string(names_.size()));
        }
        cells_.insert(cells_.end(), rows[t].begin(), rows[t].end());
    }
}

std::vector<Cell> TimeSeriesFrame::column(std::size_t d) const {
    std::vector<Cell> out(rows_);
    for (std::size_t t = 0; t < rows_; ++t) out[t] = at(t, d);
    return out;
}

void TimeSeriesFrame::set_column(std::size_t d, const std::vector<Cell>& col) {
    if (col.size() != rows_) throw std::invalid_argument("column length mismatch");
    for (std::size_t t = 0; t < rows_; ++t) set(t, d, col[t]);
}

CellMask TimeSeriesFrame::missing_mask() const {
    CellMask mask(rows_, cols());
    for (std::size_t t = 0; t < rows_; ++t)
        for (std::size_t d = 0; d < cols(); ++d)
            if (missing(t, d)) mask.set(t, d);
    return mask;
}

std::size_t TimeSeriesFrame::missing_count() const {
    return static_cast<std::size_t>(
        std::count_if(cells_.begin(), cells_.end(), [](const Cell& c) { return !c.has_value(); }));
}

std::size_t cell_count(const TimeSeriesFrame& frame) { return frame.rows() * frame.cols(); }

std::vector<FrameViolation> validate_cells(const std::vector<std::int64_t>& timestamps,
                                           const std::vector<std::vector<Cell>>& rows, std::size_t cols,
                                           bool preprocessed) {
    std::vector<FrameViolation> out;
    if (cols < 1) out.push_back({"at least 1 variable required", std::nullopt, std::nullopt});
    if (rows.size() < 2) out.push_back({"at least 2 rows required", std::nullopt, std::nullopt});
    if (timestamps.size() != rows.size()) {
        out.push_back({"timestamp count does not match row count", std::nullopt, std::nullopt});
        return out;
    }
    for (std::size_t t = 1; t < timestamps.size(); ++t) {
        if (preprocessed && timestamps[t] <= timestamps[t - 1]) {
            out.push_back({"non-strict timestamps", t, std::nullopt});
        } else if (!preprocessed && timestamps[t] < timestamps[t - 1]) {
            out.push_back({"decreasing timestamps", t, std::nullopt});
        }
    }
    for (std::size_t t = 0; t < rows.size(); ++t) {
        if (rows[t].size() != cols) {
            out.push_back({"row width mismatch", t, std::nullopt});
            continue;
        }
        for (std::size_t d = 0; d < cols; ++d) {
            if (rows[t][d] && !std::isfinite(*rows[t][d])) out.push_back({"non-finite cell", t, d});
        }
    }
    return out;
}

std::vector<FrameViolation> validate_frame(const TimeSeriesFrame& frame) {
    std::vector<FrameViolation> out;
    if (frame.cols() < 1) out.push_back({"at least 1 variable required", std::nullopt, std::nullopt});
    if (frame.rows() < 2) out.push_back({"at least 2 rows required", std::nullopt, std::nullopt});
    if (frame.step() <= 0) out.push_back({"non-strict timestamps", std::nullopt, std::nullopt});
    for (std::size_t t = 0; t < frame.rows(); ++t)
        for (std::size_t d = 0; d < frame.cols(); ++d)
            if (!frame.missing(t, d) && !std::isfinite(frame.value(t, d)))
                out.push_back({"non-finite cell", t, d});
    return out;
}

QualityRates QualityRates::from_masks(const CellMask& missing, const CellMask& outlier, const CellMask& violation) {
    const double n = static_cast<double>(missing.rows() * missing.cols());
    if (n == 0.0) return {};
    return {static_cast<double>(missing.popcount()) / n, static_cast<double>(outlier.popcount()) / n,
            static_cast<double>(violation.popcount()) / n};
}

char category_letter(IssueCategory c) {
    switch (c) {
        case IssueCategory::Missing: return 'M';
        case IssueCategory::Outlier: return 'O';
        case IssueCategory::Violation: return 'C';
    }
    return '?';
}

IssueCategory category_from_letter(char c) {
    switch (c) {
        case 'M': return IssueCategory::Missing;
        case 'O': return IssueCategory::Outlier;
        case 'C': return IssueCategory::Violation;
        default: throw std::invalid_argument(std::string("unknown category '") + c + "'");
    }
}

double rate_of(const QualityRates& r, IssueCategory c) {
    switch (c) {
        case IssueCategory::Missing: return r.missing;
        case IssueCategory::Outlier: return r.outlier;
        case IssueCategory::Violation: return r.violation;
    }
    return 0.0;
}

std::string to_string(TemporalKind k) {
    switch (k) {
        case TemporalKind::Speed: return "speed";
        case TemporalKind::Acceleration: return "acceleration";
        case TemporalKind::Variance: return "variance";
    }
    return "?";
}

TemporalKind temporal_kind_from_string(const std::string& s) {
    if (s == "speed") return TemporalKind::Speed;
    if (s == "acceleration") return TemporalKind::Acceleration;
    if (s == "variance") return TemporalKind::Variance;
    throw std::invalid_argument("unknown temporal constraint kind '" + s + "'");
}

std::optional<double> CrossConstraint::evaluate(const TimeSeriesFrame& frame, std::size_t t) const {
    std::vector<double> xs(variables.size());
    for (std::size_t i = 0; i < variables.size(); ++i) {
        const Cell& c = frame.at(t, variables[i]);
        if (!c) return std::nullopt;
        xs[i] = *c;
    }
    return evaluate(xs);
}

double CrossConstraint::evaluate(const std::vector<double>& values_on_v) const {
    double f = 0.0;
    for (const auto& term : terms) {
        double m = term.coef;
        for (std::size_t i = 0; i < term.degrees.size(); ++i) {
            for (int p = 0; p < term.degrees[i]; ++p) m *= values_on_v[i];
        }
        f += m;
    }
    return f;
}

const TemporalConstraint* ConstraintSet::find(TemporalKind kind, std::size_t variable) const {
    for (const auto& c : temporal)
        if (c.kind == kind && c.variable == variable) return &c;
    return nullptr;
}

double param_double(const ParamMap& params, const std::string& key, double fallback) {
    auto it = params.find(key);
    if (it == params.end()) return fallback;
    if (auto* v = std::get_if<double>(&it->second)) return *v;
    if (auto* v = std::get_if<std::int64_t>(&it->second)) return static_cast<double>(*v);
    return fallback;
}

std::int64_t param_int(const ParamMap& params, const std::string& key, std::int64_t fallback) {
    auto it = params.find(key);
    if (it == params.end()) return fallback;
    if (auto* v = std::get_if<std::int64_t>(&it->second)) return *v;
    if (auto* v = std::get_if<double>(&it->second)) return static_cast<std::int64_t>(*v);
    return fallback;
}

std::string param_string(const ParamMap& params, const std::string& key, const std::string& fallback) {
    auto it = params.find(key);
    if (it == params.end()) return fallback;
    if (auto* v = std::get_if<std::string>(&it->second)) return *v;
    return fallback;
}

std::string to_string(TaskKind k) {
    switch (k) {
        case TaskKind::Forecast: return "forecast";
        case TaskKind::Classify: return "classify";
        case TaskKind::Cluster: return "cluster";
    }
    return "?";
}

TaskKind task_kind_from_string(const std::string& s) {
    if (s == "forecast") return TaskKind::Forecast;
    if (s == "classify") return TaskKind::Classify;
    if (s == "cluster") return TaskKind::Cluster;
    throw std::invalid_argument("unknown task '" + s + "'");
}

}  // namespace tsclean
