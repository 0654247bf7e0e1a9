#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace tsclean {

/// Any failure to turn a file into a frame. Carries the offending location when known.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what, std::optional<std::size_t> row = std::nullopt,
                       std::optional<std::size_t> col = std::nullopt);
    std::optional<std::size_t> row() const { return row_; }
    std::optional<std::size_t> col() const { return col_; }

private:
    std::optional<std::size_t> row_;
    std::optional<std::size_t> col_;
};

/// A cell is either a finite number or Missing (std::nullopt).
using Cell = std::optional<double>;

/// Row-major T x D boolean mask over frame cells.
class CellMask {
public:
    CellMask() = default;
    CellMask(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), bits_(rows * cols, 0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    bool get(std::size_t t, std::size_t d) const { return bits_[t * cols_ + d] != 0; }
    void set(std::size_t t, std::size_t d, bool on = true) { bits_[t * cols_ + d] = on ? 1 : 0; }

    std::size_t popcount() const;
    CellMask& operator|=(const CellMask& other);
    bool operator==(const CellMask&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::uint8_t> bits_;
};

/// Regular multivariate series: T rows on an integer tick grid, D variables.
///
/// Row t sits at grid tick t; the wall-clock position is origin + t * step and
/// is kept only as metadata for writing back to disk.
class TimeSeriesFrame {
public:
    TimeSeriesFrame() = default;
    TimeSeriesFrame(std::vector<std::string> names, std::size_t rows);
    TimeSeriesFrame(std::vector<std::string> names, std::vector<std::vector<Cell>> rows,
                    std::int64_t origin = 0, std::int64_t step = 1);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }

    std::int64_t origin() const { return origin_; }
    std::int64_t step() const { return step_; }
    void set_time_axis(std::int64_t origin, std::int64_t step) {
        origin_ = origin;
        step_ = step;
    }
    std::int64_t wall_time(std::size_t t) const { return origin_ + static_cast<std::int64_t>(t) * step_; }

    const Cell& at(std::size_t t, std::size_t d) const { return cells_[t * cols() + d]; }
    bool missing(std::size_t t, std::size_t d) const { return !at(t, d).has_value(); }
    double value(std::size_t t, std::size_t d) const { return *at(t, d); }
    void set(std::size_t t, std::size_t d, Cell v) { cells_[t * cols() + d] = v; }

    /// Column d as a vector of cells.
    std::vector<Cell> column(std::size_t d) const;
    void set_column(std::size_t d, const std::vector<Cell>& col);

    CellMask missing_mask() const;
    std::size_t missing_count() const;

    bool operator==(const TimeSeriesFrame&) const = default;

private:
    std::vector<std::string> names_;
    std::size_t rows_ = 0;
    std::vector<Cell> cells_;
    std::int64_t origin_ = 0;
    std::int64_t step_ = 1;
};

/// Number of cells T * D; the denominator of every quality rate.
std::size_t cell_count(const TimeSeriesFrame& frame);

struct FrameViolation {
    std::string message;
    std::optional<std::size_t> row;
    std::optional<std::size_t> col;
    bool operator==(const FrameViolation&) const = default;
};

/// Checks shape, finiteness and (when preprocessed) strict timestamp order.
/// An empty result means the frame is valid.
std::vector<FrameViolation> validate_frame(const TimeSeriesFrame& frame);

/// Lower-level check used by ingest before regularization.
std::vector<FrameViolation> validate_cells(const std::vector<std::int64_t>& timestamps,
                                           const std::vector<std::vector<Cell>>& rows, std::size_t cols,
                                           bool preprocessed);

struct QualityRates {
    double missing = 0.0;
    double outlier = 0.0;
    double violation = 0.0;

    static QualityRates from_masks(const CellMask& missing, const CellMask& outlier, const CellMask& violation);
    double total() const { return missing + outlier + violation; }
    bool operator==(const QualityRates&) const = default;
};

enum class IssueCategory { Missing, Outlier, Violation };

char category_letter(IssueCategory c);
IssueCategory category_from_letter(char c);
inline constexpr IssueCategory kAllCategories[] = {IssueCategory::Missing, IssueCategory::Outlier,
                                                   IssueCategory::Violation};
inline std::size_t category_index(IssueCategory c) { return static_cast<std::size_t>(c); }
double rate_of(const QualityRates& r, IssueCategory c);

enum class TemporalKind { Speed, Acceleration, Variance };

std::string to_string(TemporalKind k);
TemporalKind temporal_kind_from_string(const std::string& s);

struct TemporalConstraint {
    TemporalKind kind = TemporalKind::Speed;
    std::size_t variable = 0;
    double g_min = 0.0;
    double g_max = 0.0;
    std::size_t window = 0;  // Variance only
    bool operator==(const TemporalConstraint&) const = default;
};

/// One term c * prod_i x_{V[i]}^{degrees[i]}.
struct PolyTerm {
    std::vector<int> degrees;
    double coef = 0.0;
    bool operator==(const PolyTerm&) const = default;
};

/// f(x_V) = sum of terms, required to lie in [f_min, f_max] on every row.
/// By construction f = fitted polynomial(predictors) - target, so the target
/// appears as a single linear term with coefficient -1.
struct CrossConstraint {
    std::vector<std::size_t> variables;
    std::size_t target = 0;  // position inside `variables`
    std::vector<PolyTerm> terms;
    double f_min = 0.0;
    double f_max = 0.0;
    double fit_r2 = 0.0;

    /// Evaluates f on a row; nullopt if any participating cell is Missing.
    std::optional<double> evaluate(const TimeSeriesFrame& frame, std::size_t t) const;
    double evaluate(const std::vector<double>& values_on_v) const;
    bool operator==(const CrossConstraint&) const = default;
};

struct ConstraintSet {
    std::vector<std::string> schema;
    std::vector<TemporalConstraint> temporal;
    std::vector<CrossConstraint> cross;

    const TemporalConstraint* find(TemporalKind kind, std::size_t variable) const;
    bool operator==(const ConstraintSet&) const = default;
};

using ParamValue = std::variant<bool, std::int64_t, double, std::string>;
using ParamMap = std::map<std::string, ParamValue>;

struct OperatorDescriptor {
    std::string id;
    IssueCategory category = IssueCategory::Missing;
    ParamMap params;
    bool operator==(const OperatorDescriptor&) const = default;
};

double param_double(const ParamMap& params, const std::string& key, double fallback);
std::int64_t param_int(const ParamMap& params, const std::string& key, std::int64_t fallback);
std::string param_string(const ParamMap& params, const std::string& key, const std::string& fallback);

struct RewardBreakdown {
    double structure = 0.0;
    double distance = 0.0;
    double local = 0.0;
    double lite = 0.0;
    double quality = 0.0;
    double cost = 0.0;
    double penalty = 0.0;
    double low_total = 0.0;
    double high_total = 0.0;
    bool operator==(const RewardBreakdown&) const = default;
};

struct PipelineStep {
    OperatorDescriptor op;
    QualityRates pre_rates;
    QualityRates post_rates;
    RewardBreakdown reward;
    std::size_t cells_changed = 0;
    bool operator==(const PipelineStep&) const = default;
};

/// Ordered operator sequence; steps[0] is applied first.
struct CleaningPipeline {
    std::vector<PipelineStep> steps;
    std::size_t size() const { return steps.size(); }
    bool operator==(const CleaningPipeline&) const = default;
};

enum class TaskKind { Forecast, Classify, Cluster };

std::string to_string(TaskKind k);
TaskKind task_kind_from_string(const std::string& s);

struct EvaluationReport {
    std::optional<double> f1;
    std::optional<double> nmse;
    std::optional<double> rra;
    double perf_dirty = 0.0;
    double perf_clean = 0.0;
    double delta_perf = 0.0;
    TaskKind task = TaskKind::Forecast;
    bool operator==(const EvaluationReport&) const = default;
};

}  // namespace tsclean
