#include "tsclean/operators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "tsclean/constraints.hpp"
#include "tsclean/stats.hpp"

namespace tsclean {

namespace {

using Column = std::vector<Cell>;
using Targets = std::vector<bool>;

// ---------------------------------------------------------------------------
// Column-level fill primitives. A target cell is one the operator should
// (re)write; anchors are cells that hold a value and are not targets.

std::vector<std::size_t> anchors_of(const Column& col, const Targets& target) {
    std::vector<std::size_t> a;
    for (std::size_t t = 0; t < col.size(); ++t)
        if (col[t] && !target[t]) a.push_back(t);
    return a;
}

std::vector<double> anchor_values(const Column& col, const std::vector<std::size_t>& anchors) {
    std::vector<double> v;
    v.reserve(anchors.size());
    for (auto t : anchors) v.push_back(*col[t]);
    return v;
}

// Index into `anchors` of the last anchor before t, or -1.
long prev_anchor(const std::vector<std::size_t>& anchors, std::size_t t) {
    auto it = std::lower_bound(anchors.begin(), anchors.end(), t);
    return static_cast<long>(it - anchors.begin()) - 1;
}

// Index of the first anchor after t, or anchors.size().
std::size_t next_anchor(const std::vector<std::size_t>& anchors, std::size_t t) {
    return static_cast<std::size_t>(std::upper_bound(anchors.begin(), anchors.end(), t) - anchors.begin());
}

void fill_linear(Column& col, const Targets& target) {
    const auto anchors = anchors_of(col, target);
    if (anchors.empty()) return;
    const Column src = col;
    for (std::size_t t = 0; t < col.size(); ++t) {
        if (!target[t]) continue;
        const long p = prev_anchor(anchors, t);
        const std::size_t n = next_anchor(anchors, t);
        if (p < 0) {
            col[t] = *src[anchors[n]];
        } else if (n >= anchors.size()) {
            col[t] = *src[anchors[static_cast<std::size_t>(p)]];
        } else {
            const double t0 = static_cast<double>(anchors[static_cast<std::size_t>(p)]);
            const double t1 = static_cast<double>(anchors[n]);
            const double y0 = *src[anchors[static_cast<std::size_t>(p)]];
            const double y1 = *src[anchors[n]];
            col[t] = y0 + (y1 - y0) * (static_cast<double>(t) - t0) / (t1 - t0);
        }
    }
}

// Carries the nearest anchor forward (or backward); gaps with no anchor on
// the carrying side stay untouched.
void fill_carry(Column& col, const Targets& target, bool forward) {
    const auto anchors = anchors_of(col, target);
    const Column src = col;
    for (std::size_t t = 0; t < col.size(); ++t) {
        if (!target[t]) continue;
        if (forward) {
            const long p = prev_anchor(anchors, t);
            if (p >= 0) col[t] = *src[anchors[static_cast<std::size_t>(p)]];
        } else {
            const std::size_t n = next_anchor(anchors, t);
            if (n < anchors.size()) col[t] = *src[anchors[n]];
        }
    }
}

void fill_nearest(Column& col, const Targets& target) {
    const auto anchors = anchors_of(col, target);
    if (anchors.empty()) return;
    const Column src = col;
    for (std::size_t t = 0; t < col.size(); ++t) {
        if (!target[t]) continue;
        const long p = prev_anchor(anchors, t);
        const std::size_t n = next_anchor(anchors, t);
        std::size_t pick;
        if (p < 0) pick = anchors[n];
        else if (n >= anchors.size()) pick = anchors[static_cast<std::size_t>(p)];
        else {
            const std::size_t a = anchors[static_cast<std::size_t>(p)], b = anchors[n];
            pick = (t - a) <= (b - t) ? a : b;  // ties go to the earlier anchor
        }
        col[t] = *src[pick];
    }
}

void fill_constant(Column& col, const Targets& target, double v) {
    for (std::size_t t = 0; t < col.size(); ++t)
        if (target[t]) col[t] = v;
}

// Mean or median of the anchors within a centered window of width w.
void fill_window(Column& col, const Targets& target, std::size_t w, bool use_median) {
    const Column src = col;
    const std::size_t half = w / 2;
    for (std::size_t t = 0; t < col.size(); ++t) {
        if (!target[t]) continue;
        std::vector<double> nb;
        const std::size_t lo = t >= half ? t - half : 0;
        const std::size_t hi = std::min(col.size() - 1, t + half);
        for (std::size_t i = lo; i <= hi; ++i)
            if (src[i] && !target[i]) nb.push_back(*src[i]);
        if (nb.empty()) continue;
        col[t] = use_median ? stats::median(nb) : stats::mean(nb);
    }
}

// Natural cubic spline through the anchors; outside the anchor span the
// nearest anchor value is used. Returns false with fewer than 4 anchors.
bool fill_spline(Column& col, const Targets& target) {
    const auto anchors = anchors_of(col, target);
    const std::size_t n = anchors.size();
    if (n < 4) return false;
    std::vector<double> x(n), y = anchor_values(col, anchors);
    for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>(anchors[i]);

    // Second derivatives m[1..n-2] from the tridiagonal system (Thomas algorithm).
    std::vector<double> m(n, 0.0), c(n, 0.0), r(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double h0 = x[i] - x[i - 1], h1 = x[i + 1] - x[i];
        const double a = h0, b = 2.0 * (h0 + h1), cc = h1;
        const double rhs = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
        const double denom = b - a * c[i - 1];
        c[i] = cc / denom;
        r[i] = (rhs - a * r[i - 1]) / denom;
    }
    for (std::size_t i = n - 2; i >= 1; --i) {
        m[i] = r[i] - c[i] * m[i + 1];
        if (i == 1) break;
    }

    for (std::size_t t = 0; t < col.size(); ++t) {
        if (!target[t]) continue;
        const double tt = static_cast<double>(t);
        if (tt <= x.front()) {
            col[t] = y.front();
            continue;
        }
        if (tt >= x.back()) {
            col[t] = y.back();
            continue;
        }
        const std::size_t k = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), tt) - x.begin()) - 1;
        const double h = x[k + 1] - x[k];
        const double A = (x[k + 1] - tt) / h, B = (tt - x[k]) / h;
        col[t] = A * y[k] + B * y[k + 1] + ((A * A * A - A) * m[k] + (B * B * B - B) * m[k + 1]) * h * h / 6.0;
    }
    return true;
}

// Exponentially weighted level of the anchors seen so far; targets take the
// current level. A leading gap takes the first anchor value.
void fill_ewma(Column& col, const Targets& target, double alpha) {
    const auto anchors = anchors_of(col, target);
    if (anchors.empty()) return;
    double level = *col[anchors.front()];
    for (std::size_t t = 0; t < col.size(); ++t) {
        if (target[t]) col[t] = level;
        else if (col[t]) level = alpha * *col[t] + (1.0 - alpha) * level;
    }
}

// Short gaps (<= 2) carry the last value; longer gaps are interpolated.
void fill_hybrid(Column& col, const Targets& target) {
    Targets short_gaps(col.size(), false), long_gaps(col.size(), false);
    std::size_t t = 0;
    while (t < col.size()) {
        if (!target[t]) {
            ++t;
            continue;
        }
        std::size_t end = t;
        while (end < col.size() && target[end]) ++end;
        const bool has_prev = t > 0 && col[t - 1].has_value();
        for (std::size_t i = t; i < end; ++i) (end - t <= 2 && has_prev ? short_gaps : long_gaps)[i] = true;
        t = end;
    }
    Targets all = target;
    Column work = col;
    fill_carry(work, all, true);
    Column lin = col;
    fill_linear(lin, all);
    for (std::size_t i = 0; i < col.size(); ++i) {
        if (short_gaps[i]) col[i] = work[i];
        else if (long_gaps[i]) col[i] = lin[i];
    }
}

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Uniform in [-1, 1), a pure function of (seed, t, d) so replays are exact.
double cell_uniform(std::uint64_t seed, std::size_t t, std::size_t d) {
    const std::uint64_t h = splitmix(seed ^ splitmix(static_cast<std::uint64_t>(t) * 0x100000001b3ULL + d));
    return static_cast<double>(h >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

void fill_random_mad(Column& col, const Targets& target, std::uint64_t seed, std::size_t d) {
    const auto anchors = anchors_of(col, target);
    if (anchors.empty()) return;
    const auto vals = anchor_values(col, anchors);
    const double med = stats::median(vals);
    const double s = stats::kMadScale * stats::mad(vals);
    for (std::size_t t = 0; t < col.size(); ++t)
        if (target[t]) col[t] = med + cell_uniform(seed, t, d) * s;
}

// Same phase one or more periods away, nearest first (earlier on ties);
// falls back to linear interpolation for cells with no same-phase anchor.
void fill_seasonal(Column& col, const Targets& target, std::size_t period) {
    const Column src = col;
    Targets rest(col.size(), false);
    bool any_rest = false;
    for (std::size_t t = 0; t < col.size(); ++t) {
        if (!target[t]) continue;
        bool done = false;
        for (std::size_t k = 1; !done && k * period < col.size(); ++k) {
            if (t >= k * period && src[t - k * period] && !target[t - k * period]) {
                col[t] = *src[t - k * period];
                done = true;
            } else if (t + k * period < col.size() && src[t + k * period] && !target[t + k * period]) {
                col[t] = *src[t + k * period];
                done = true;
            }
        }
        if (!done) rest[t] = any_rest = true;
    }
    if (any_rest) {
        Column lin = src;
        fill_linear(lin, target);
        for (std::size_t t = 0; t < col.size(); ++t)
            if (rest[t]) col[t] = lin[t];
    }
}

void clip_targets(Column& col, const Targets& target, double lo, double hi) {
    for (std::size_t t = 0; t < col.size(); ++t)
        if (target[t] && col[t]) col[t] = std::clamp(*col[t], lo, hi);
}

// ---------------------------------------------------------------------------
// Frame-level adapters.

Targets missing_targets(const TimeSeriesFrame& f, std::size_t d) {
    Targets tg(f.rows());
    for (std::size_t t = 0; t < f.rows(); ++t) tg[t] = f.missing(t, d);
    return tg;
}

Targets mask_targets(const CellMask& mask, const TimeSeriesFrame& f, std::size_t d) {
    Targets tg(f.rows(), false);
    if (mask.rows() != f.rows() || mask.cols() != f.cols()) return tg;
    for (std::size_t t = 0; t < f.rows(); ++t) tg[t] = mask.get(t, d) && !f.missing(t, d);
    return tg;
}

bool any_of(const Targets& tg) { return std::find(tg.begin(), tg.end(), true) != tg.end(); }

using ColumnFill = std::function<void(Column&, const Targets&, std::size_t d, const ParamMap&, std::vector<std::string>&)>;

ApplyFn imputer(ColumnFill fill) {
    return [fill](const TimeSeriesFrame& f, const OperatorContext&, const ParamMap& p, std::vector<std::string>& w) {
        TimeSeriesFrame out = f;
        for (std::size_t d = 0; d < f.cols(); ++d) {
            const auto tg = missing_targets(f, d);
            if (!any_of(tg)) continue;
            auto col = f.column(d);
            fill(col, tg, d, p, w);
            out.set_column(d, col);
        }
        return out;
    };
}

ApplyFn masked(ColumnFill fill, bool use_violation) {
    return [fill, use_violation](const TimeSeriesFrame& f, const OperatorContext& ctx, const ParamMap& p,
                                 std::vector<std::string>& w) {
        TimeSeriesFrame out = f;
        const CellMask& mask = use_violation ? ctx.violation : ctx.outlier;
        for (std::size_t d = 0; d < f.cols(); ++d) {
            const auto tg = mask_targets(mask, f, d);
            if (!any_of(tg)) continue;
            auto col = f.column(d);
            fill(col, tg, d, p, w);
            out.set_column(d, col);
        }
        return out;
    };
}

ColumnFill spline_fill(const std::string& id) {
    return [id](Column& c, const Targets& tg, std::size_t d, const ParamMap&, std::vector<std::string>& w) {
        if (!fill_spline(c, tg)) w.push_back(id + ": fewer than 4 anchors in column " + std::to_string(d));
    };
}

ColumnFill window_fill(bool median) {
    return [median](Column& c, const Targets& tg, std::size_t, const ParamMap& p, std::vector<std::string>&) {
        fill_window(c, tg, static_cast<std::size_t>(param_int(p, "window", 5)), median);
    };
}

ColumnFill ewma_fill() {
    return [](Column& c, const Targets& tg, std::size_t, const ParamMap& p, std::vector<std::string>&) {
        fill_ewma(c, tg, param_double(p, "alpha", 0.3));
    };
}

// Anchor statistics exclude the target cells so the repair is not pulled by the outliers themselves.
std::vector<double> anchor_sample(const Column& c, const Targets& tg) { return anchor_values(c, anchors_of(c, tg)); }

// ---------------------------------------------------------------------------
// Constraint repairs.

const ConstraintSet& need_constraints(const OperatorContext& ctx) {
    static const ConstraintSet empty;
    return ctx.constraints ? *ctx.constraints : empty;
}

// Moves each flagged cell the least distance that brings its speed from the
// (already repaired) previous cell back inside the bounds.
void speed_clamp_min(TimeSeriesFrame& out, const OperatorContext& ctx) {
    const auto& cs = need_constraints(ctx);
    for (const auto& c : cs.temporal) {
        if (c.kind != TemporalKind::Speed) continue;
        const auto tg = mask_targets(ctx.violation, out, c.variable);
        for (std::size_t t = 1; t < out.rows(); ++t) {
            if (!tg[t] || out.missing(t - 1, c.variable)) continue;
            const double prev = out.value(t - 1, c.variable);
            const double s = out.value(t, c.variable) - prev;
            if (s < c.g_min || s > c.g_max) out.set(t, c.variable, prev + std::clamp(s, c.g_min, c.g_max));
        }
    }
}

// Screen-style: aim for the local median, restricted to the values that keep
// both adjacent speeds feasible (or the previous-speed band if that is empty).
void speed_clamp_median(TimeSeriesFrame& out, const OperatorContext& ctx) {
    const auto& cs = need_constraints(ctx);
    for (const auto& c : cs.temporal) {
        if (c.kind != TemporalKind::Speed) continue;
        const std::size_t d = c.variable;
        const auto tg = mask_targets(ctx.violation, out, d);
        for (std::size_t t = 0; t < out.rows(); ++t) {
            if (!tg[t]) continue;
            std::vector<double> nb;
            for (std::size_t i = t >= 2 ? t - 2 : 0; i <= std::min(out.rows() - 1, t + 2); ++i)
                if (i != t && !out.missing(i, d) && !tg[i]) nb.push_back(out.value(i, d));
            double lo = -INFINITY, hi = INFINITY;
            const bool has_prev = t > 0 && !out.missing(t - 1, d);
            const bool has_next = t + 1 < out.rows() && !out.missing(t + 1, d);
            if (has_prev) {
                lo = out.value(t - 1, d) + c.g_min;
                hi = out.value(t - 1, d) + c.g_max;
            }
            double lo2 = lo, hi2 = hi;
            if (has_next) {
                lo2 = std::max(lo, out.value(t + 1, d) - c.g_max);
                hi2 = std::min(hi, out.value(t + 1, d) - c.g_min);
            }
            if (lo2 <= hi2) {
                lo = lo2;
                hi = hi2;
            }
            if (!has_prev && !has_next) continue;
            const double aim = nb.empty() ? out.value(t, d) : stats::median(nb);
            out.set(t, d, std::clamp(aim, lo, hi));
        }
    }
}

void accel_clamp(TimeSeriesFrame& out, const OperatorContext& ctx) {
    const auto& cs = need_constraints(ctx);
    for (const auto& c : cs.temporal) {
        if (c.kind != TemporalKind::Acceleration) continue;
        const std::size_t d = c.variable;
        const auto tg = mask_targets(ctx.violation, out, d);
        for (std::size_t t = 2; t < out.rows(); ++t) {
            if (!tg[t] || out.missing(t - 1, d) || out.missing(t - 2, d)) continue;
            const double base = 2.0 * out.value(t - 1, d) - out.value(t - 2, d);
            const double a = out.value(t, d) - base;
            if (a < c.g_min || a > c.g_max) out.set(t, d, base + std::clamp(a, c.g_min, c.g_max));
        }
    }
}

double term_derivative(const PolyTerm& term, const std::vector<double>& xs, std::size_t i) {
    if (term.degrees[i] == 0) return 0.0;
    double v = term.coef * term.degrees[i];
    for (std::size_t j = 0; j < xs.size(); ++j) {
        const int p = j == i ? term.degrees[j] - 1 : term.degrees[j];
        for (int k = 0; k < p; ++k) v *= xs[j];
    }
    return v;
}

// Adjusts position `which` of the constraint's variables on row t so that f
// lands on the nearest bound (one Newton step; exact when f is linear in it).
bool project_row(TimeSeriesFrame& out, const CrossConstraint& c, std::size_t t, std::size_t which) {
    const auto f = c.evaluate(out, t);
    if (!f || (*f >= c.f_min && *f <= c.f_max)) return false;
    std::vector<double> xs;
    for (auto v : c.variables) xs.push_back(out.value(t, v));
    double deriv = 0.0;
    for (const auto& term : c.terms) deriv += term_derivative(term, xs, which);
    if (std::abs(deriv) < 1e-12) return false;
    const double goal = std::clamp(*f, c.f_min, c.f_max);
    const double nv = xs[which] + (goal - *f) / deriv;
    if (!std::isfinite(nv)) return false;
    out.set(t, c.variables[which], nv);
    return true;
}

void cross_project(TimeSeriesFrame& out, const OperatorContext& ctx, bool least_corr) {
    const auto& cs = need_constraints(ctx);
    if (ctx.violation.rows() != out.rows() || ctx.violation.cols() != out.cols()) return;
    for (const auto& c : cs.cross) {
        std::size_t which = c.target;
        if (least_corr && c.variables.size() > 2) {
            // member whose mean |corr| with the other members is smallest
            double best = INFINITY;
            for (std::size_t i = 0; i < c.variables.size(); ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < c.variables.size(); ++j) {
                    if (i == j) continue;
                    std::vector<double> a, b;
                    for (std::size_t t = 0; t < out.rows(); ++t) {
                        if (out.missing(t, c.variables[i]) || out.missing(t, c.variables[j])) continue;
                        a.push_back(out.value(t, c.variables[i]));
                        b.push_back(out.value(t, c.variables[j]));
                    }
                    s += std::abs(stats::pearson(a, b));
                }
                if (s < best) {
                    best = s;
                    which = i;
                }
            }
        } else if (least_corr) {
            which = 0;  // with two members the least-correlated choice is symmetric; repair the predictor
        }
        for (std::size_t t = 0; t < out.rows(); ++t) {
            if (!ctx.violation.get(t, c.variables[which])) continue;
            if (!project_row(out, c, t, which) && which != c.target) project_row(out, c, t, c.target);
        }
    }
}

// ---------------------------------------------------------------------------

ParamMap P(std::initializer_list<std::pair<const std::string, ParamValue>> init) { return ParamMap(init); }

}  // namespace

std::size_t detect_period(const Column& column) {
    std::vector<double> xs;
    for (const auto& c : column)
        if (c) xs.push_back(*c);
    if (xs.size() < 8) return 0;
    const double mean = stats::mean(xs);
    double denom = 0.0;
    for (double x : xs) denom += (x - mean) * (x - mean);
    if (denom <= 0.0) return 0;
    std::size_t best_lag = 0;
    double best = 0.3;
    for (std::size_t lag = 2; lag <= column.size() / 2; ++lag) {
        double num = 0.0;
        for (std::size_t t = 0; t + lag < column.size(); ++t)
            if (column[t] && column[t + lag]) num += (*column[t] - mean) * (*column[t + lag] - mean);
        const double r = num / denom;
        if (r > best) {
            best = r;
            best_lag = lag;
        }
    }
    return best_lag;
}

void OperatorRegistry::register_op(const OperatorDescriptor& descriptor, ApplyFn fn) {
    if (descriptor.id.empty()) throw std::invalid_argument("operator id must not be empty");
    if (entries_.count(descriptor.id)) throw std::invalid_argument("duplicate operator id '" + descriptor.id + "'");
    entries_.emplace(descriptor.id, Entry{descriptor, std::move(fn)});
    by_category_[category_index(descriptor.category)].push_back(descriptor);
}

const std::vector<OperatorDescriptor>& OperatorRegistry::list(IssueCategory category) const {
    return by_category_[category_index(category)];
}

const OperatorDescriptor& OperatorRegistry::descriptor(const std::string& id) const {
    auto it = entries_.find(id);
    if (it == entries_.end()) throw std::out_of_range("unknown operator id '" + id + "'");
    return it->second.descriptor;
}

OperatorRegistry OperatorRegistry::subset(const std::vector<std::string>& ids) const {
    OperatorRegistry out;
    for (const auto& id : ids) {
        auto it = entries_.find(id);
        if (it == entries_.end()) throw std::out_of_range("unknown operator id '" + id + "'");
        out.register_op(it->second.descriptor, it->second.fn);
    }
    return out;
}

ApplyResult OperatorRegistry::apply(const OperatorDescriptor& op, const TimeSeriesFrame& frame,
                                    const OperatorContext& ctx) const {
    auto it = entries_.find(op.id);
    if (it == entries_.end()) throw std::out_of_range("unknown operator id '" + op.id + "'");
    const IssueCategory cat = it->second.descriptor.category;

    ApplyResult res;
    TimeSeriesFrame proposed;
    try {
        proposed = it->second.fn(frame, ctx, op.params, res.warnings);
    } catch (const std::exception& e) {
        res.warnings.push_back(op.id + " failed: " + e.what());
        res.frame = frame;
        return res;
    }
    if (proposed.rows() != frame.rows() || proposed.cols() != frame.cols()) {
        res.warnings.push_back(op.id + " returned a frame of the wrong shape");
        res.frame = frame;
        return res;
    }

    const CellMask* allowed = cat == IssueCategory::Outlier     ? &ctx.outlier
                              : cat == IssueCategory::Violation ? &ctx.violation
                                                                : nullptr;
    const bool mask_ok = allowed && allowed->rows() == frame.rows() && allowed->cols() == frame.cols();
    res.frame = frame;
    for (std::size_t t = 0; t < frame.rows(); ++t) {
        for (std::size_t d = 0; d < frame.cols(); ++d) {
            const Cell& nv = proposed.at(t, d);
            if (nv == frame.at(t, d)) continue;
            if (nv && !std::isfinite(*nv)) continue;
            bool permitted;
            if (cat == IssueCategory::Missing) permitted = frame.missing(t, d) && nv.has_value();
            else permitted = mask_ok && allowed->get(t, d) && !frame.missing(t, d) && nv.has_value();
            if (!permitted) continue;
            res.frame.set(t, d, nv);
            ++res.cells_changed;
        }
    }
    return res;
}

OperatorRegistry OperatorRegistry::with_defaults() {
    using IC = IssueCategory;
    OperatorRegistry r;
    auto M = [&](const std::string& id, ParamMap p, ColumnFill fill) { r.register_op({id, IC::Missing, std::move(p)}, imputer(std::move(fill))); };
    auto O = [&](const std::string& id, ParamMap p, ColumnFill fill) { r.register_op({id, IC::Outlier, std::move(p)}, masked(std::move(fill), false)); };
    auto C = [&](const std::string& id, ParamMap p, ApplyFn fn) { r.register_op({id, IC::Violation, std::move(p)}, std::move(fn)); };

    // --- imputation -----------------------------------------------------
    M("impute.ffill", {}, [](Column& c, const Targets& tg, std::size_t, const ParamMap&, auto&) { fill_carry(c, tg, true); });
    M("impute.bfill", {}, [](Column& c, const Targets& tg, std::size_t, const ParamMap&, auto&) { fill_carry(c, tg, false); });
    M("impute.mean", {}, [](Column& c, const Targets& tg, std::size_t, const ParamMap&, auto&) {
        const auto a = anchor_sample(c, tg);
        if (!a.empty()) fill_constant(c, tg, stats::mean(a));
    });
    M("impute.median", {}, [](Column& c, const Targets& tg, std::size_t, const ParamMap&, auto&) {
        const auto a = anchor_sample(c, tg);
        if (!a.empty()) fill_constant(c, tg, stats::median(a));
    });
    M("impute.linear", {}, [](Column& c, const Targets& tg, std::size_t, const ParamMap&, auto&) { fill_linear(c, tg); });
    M("impute.spline", {}, spline_fill("impute.spline"));
    for (int w : {3, 5, 9}) M("impute.moving_average.w" + std::to_string(w), P({{"window", std::int64_t{w}}}), window_fill(false));
    for (const char* mode : {"auto", "half"}) {
        M(std::string("impute.seasonal.") + mode, P({{"period", std::string(mode)}}),
          [](Column& c, const Targets& tg, std::size_t d, const ParamMap& p, std::vector<std::string>& w) {
              std::size_t period = detect_period(c);
              if (param_string(p, "period", "auto") == "half") period /= 2;
              if (period < 1) {
                  w.push_back("impute.seasonal: no period in column " + std::to_string(d) + ", interpolating");
                  fill_linear(c, tg);
                  return;
              }
              fill_seasonal(c, tg, period);
          });
    }
    for (int k : {3, 5}) {
        r.register_op({"impute.knn.k" + std::to_string(k), IC::Missing, P({{"k", std::int64_t{k}}})},
                      [](const TimeSeriesFrame& f, const OperatorContext&, const ParamMap& p, std::vector<std::string>&) {
                          const std::size_t k = static_cast<std::size_t>(param_int(p, "k", 3));
                          TimeSeriesFrame out = f;
                          std::vector<double> scale(f.cols(), 1.0);
                          for (std::size_t d = 0; d < f.cols(); ++d) {
                              const auto xs = stats::observed(f, d);
                              const double s = xs.size() > 1 ? stats::stddev(xs) : 0.0;
                              scale[d] = s > 0.0 ? s : 1.0;
                          }
                          for (std::size_t d = 0; d < f.cols(); ++d) {
                              const auto tg = missing_targets(f, d);
                              if (!any_of(tg)) continue;
                              auto fallback = f.column(d);
                              fill_linear(fallback, tg);
                              for (std::size_t t = 0; t < f.rows(); ++t) {
                                  if (!tg[t]) continue;
                                  // donors: rows with column d observed, compared on the other columns observed in both
                                  std::vector<std::pair<double, double>> donors;  // (distance, value)
                                  for (std::size_t u = 0; u < f.rows(); ++u) {
                                      if (u == t || f.missing(u, d)) continue;
                                      double dist = 0.0;
                                      std::size_t shared = 0;
                                      for (std::size_t e = 0; e < f.cols(); ++e) {
                                          if (e == d || f.missing(t, e) || f.missing(u, e)) continue;
                                          const double z = (f.value(t, e) - f.value(u, e)) / scale[e];
                                          dist += z * z;
                                          ++shared;
                                      }
                                      if (shared == 0) continue;
                                      donors.push_back({dist / static_cast<double>(shared), f.value(u, d)});
                                  }
                                  if (donors.size() < k) {
                                      out.set(t, d, fallback[t]);
                                      continue;
                                  }
                                  std::partial_sort(donors.begin(), donors.begin() + static_cast<long>(k), donors.end());
                                  double sum = 0.0;
                                  for (std::size_t i = 0; i < k; ++i) sum += donors[i].second;
                                  out.set(t, d, sum / static_cast<double>(k));
                              }
                          }
                          return out;
                      });
    }
    for (double a : {0.3, 0.6}) M(a == 0.3 ? "impute.ewma.a03" : "impute.ewma.a06", P({{"alpha", a}}), ewma_fill());
    M("impute.hybrid_locf_linear", {}, [](Column& c, const Targets& tg, std::size_t, const ParamMap&, auto&) { fill_hybrid(c, tg); });
    for (int w : {5, 9}) M("impute.median_window.w" + std::to_string(w), P({{"window", std::int64_t{w}}}), window_fill(true));
    M("impute.random_mad", P({{"seed", std::int64_t{0}}}),
      [](Column& c, const Targets& tg, std::size_t d, const ParamMap& p, auto&) {
          fill_random_mad(c, tg, static_cast<std::uint64_t>(param_int(p, "seed", 0)), d);
      });
    M("impute.nearest", {}, [](Column& c, const Targets& tg, std::size_t, const ParamMap&, auto&) { fill_nearest(c, tg); });

    // --- outlier repair -------------------------------------------------
    for (double k : {2.0, 3.0}) {
        O(k == 2.0 ? "outlier.mad_clip.k2" : "outlier.mad_clip.k3", P({{"k", k}}),
          [](Column& c, const Targets& tg, std::size_t, const ParamMap& p, auto&) {
              const auto a = anchor_sample(c, tg);
              if (a.size() < 2) return;
              const double med = stats::median(a), s = param_double(p, "k", 3.0) * stats::kMadScale * stats::mad(a);
              clip_targets(c, tg, med - s, med + s);
          });
    }
    for (double q : {0.01, 0.05}) {
        O(q == 0.01 ? "outlier.winsorize.q01" : "outlier.winsorize.q05", P({{"q", q}}),
          [](Column& c, const Targets& tg, std::size_t, const ParamMap& p, auto&) {
              const auto a = anchor_sample(c, tg);
              if (a.size() < 2) return;
              const double q = param_double(p, "q", 0.05);
              clip_targets(c, tg, stats::quantile(a, q), stats::quantile(a, 1.0 - q));
          });
    }
    for (int w : {5, 9}) {
        O("outlier.hampel.w" + std::to_string(w), P({{"window", std::int64_t{w}}}),
          [](Column& c, const Targets& tg, std::size_t, const ParamMap& p, auto&) {
              const std::size_t half = static_cast<std::size_t>(param_int(p, "window", 5)) / 2;
              const Column src = c;
              for (std::size_t t = 0; t < c.size(); ++t) {
                  if (!tg[t]) continue;
                  std::vector<double> nb;
                  for (std::size_t i = t >= half ? t - half : 0; i <= std::min(c.size() - 1, t + half); ++i)
                      if (i != t && src[i] && !tg[i]) nb.push_back(*src[i]);
                  if (nb.size() < 2) continue;
                  const double med = stats::median(nb);
                  const double s = stats::kMadScale * stats::mad(nb);
                  if (std::abs(*src[t] - med) > 3.0 * s) c[t] = med;
              }
          });
    }
    for (int w : {3, 5, 9}) {
        O("outlier.median_filter.w" + std::to_string(w), P({{"window", std::int64_t{w}}}),
          [](Column& c, const Targets& tg, std::size_t, const ParamMap& p, auto&) {
              const std::size_t half = static_cast<std::size_t>(param_int(p, "window", 5)) / 2;
              const Column src = c;
              for (std::size_t t = 0; t < c.size(); ++t) {
                  if (!tg[t]) continue;
                  std::vector<double> nb;
                  for (std::size_t i = t >= half ? t - half : 0; i <= std::min(c.size() - 1, t + half); ++i)
                      if (src[i]) nb.push_back(*src[i]);
                  c[t] = stats::median(nb);
              }
          });
    }
    O("outlier.linear", {}, [](Column& c, const Targets& tg, std::size_t, const ParamMap&, auto&) { fill_linear(c, tg); });
    O("outlier.spline", {}, spline_fill("outlier.spline"));
    for (double a : {0.3, 0.6}) O(a == 0.3 ? "outlier.ewma.a03" : "outlier.ewma.a06", P({{"alpha", a}}), ewma_fill());
    for (int len : {5, 15}) {
        O("outlier.segment_reinterp.max" + std::to_string(len), P({{"max_len", std::int64_t{len}}}),
          [](Column& c, const Targets& tg, std::size_t, const ParamMap& p, auto&) {
              const std::size_t max_len = static_cast<std::size_t>(param_int(p, "max_len", 5));
              Targets runs(c.size(), false);
              for (std::size_t t = 0; t < c.size();) {
                  if (!tg[t]) {
                      ++t;
                      continue;
                  }
                  std::size_t end = t;
                  while (end < c.size() && tg[end]) ++end;
                  if (end - t <= max_len)
                      for (std::size_t i = t; i < end; ++i) runs[i] = true;
                  t = end;
              }
              // anchors must skip every flagged cell, not just the runs being rewritten
              Column lin = c;
              fill_linear(lin, tg);
              for (std::size_t t = 0; t < c.size(); ++t)
                  if (runs[t]) c[t] = lin[t];
          });
    }
    O("outlier.neighbor_mean", {}, [](Column& c, const Targets& tg, std::size_t, const ParamMap&, auto&) {
        const auto anchors = anchors_of(c, tg);
        const Column src = c;
        for (std::size_t t = 0; t < c.size(); ++t) {
            if (!tg[t]) continue;
            const long p = prev_anchor(anchors, t);
            const std::size_t n = next_anchor(anchors, t);
            std::vector<double> v;
            if (p >= 0) v.push_back(*src[anchors[static_cast<std::size_t>(p)]]);
            if (n < anchors.size()) v.push_back(*src[anchors[n]]);
            if (!v.empty()) c[t] = stats::mean(v);
        }
    });
    O("outlier.prev_value", {}, [](Column& c, const Targets& tg, std::size_t, const ParamMap&, auto&) {
        Column fwd = c;
        fill_carry(fwd, tg, true);
        Column bwd = c;
        fill_carry(bwd, tg, false);
        const auto anchors = anchors_of(c, tg);
        for (std::size_t t = 0; t < c.size(); ++t)
            if (tg[t]) c[t] = prev_anchor(anchors, t) >= 0 ? fwd[t] : bwd[t];
    });
    O("outlier.iqr_clip", {}, [](Column& c, const Targets& tg, std::size_t, const ParamMap&, auto&) {
        const auto a = anchor_sample(c, tg);
        if (a.size() < 2) return;
        const double q1 = stats::quantile(a, 0.25), q3 = stats::quantile(a, 0.75);
        clip_targets(c, tg, q1 - 1.5 * (q3 - q1), q3 + 1.5 * (q3 - q1));
    });

    // --- constraint repair ----------------------------------------------
    auto frame_op = [](void (*fn)(TimeSeriesFrame&, const OperatorContext&)) -> ApplyFn {
        return [fn](const TimeSeriesFrame& f, const OperatorContext& ctx, const ParamMap&, std::vector<std::string>&) {
            TimeSeriesFrame out = f;
            fn(out, ctx);
            return out;
        };
    };
    C("repair.speed_clamp_min", {}, frame_op(speed_clamp_min));
    C("repair.speed_clamp_median", {}, frame_op(speed_clamp_median));
    C("repair.accel_clamp", {}, frame_op(accel_clamp));
    for (int w : {5, 9}) {
        r.register_op({"repair.variance_smooth.w" + std::to_string(w), IC::Violation, P({{"window", std::int64_t{w}}})},
                      masked(window_fill(true), true));
    }
    C("repair.cross_target", {}, [](const TimeSeriesFrame& f, const OperatorContext& ctx, const ParamMap&, auto&) {
        TimeSeriesFrame out = f;
        cross_project(out, ctx, false);
        return out;
    });
    C("repair.cross_least_corr", {}, [](const TimeSeriesFrame& f, const OperatorContext& ctx, const ParamMap&, auto&) {
        TimeSeriesFrame out = f;
        cross_project(out, ctx, true);
        return out;
    });
    r.register_op({"repair.column_median", IC::Violation, {}},
                  masked([](Column& c, const Targets& tg, std::size_t, const ParamMap&, auto&) {
                      const auto a = anchor_sample(c, tg);
                      if (!a.empty()) fill_constant(c, tg, stats::median(a));
                  }, true));
    r.register_op({"repair.global_bound_clamp", IC::Violation, {}},
                  masked([](Column& c, const Targets& tg, std::size_t, const ParamMap&, auto&) {
                      const auto a = anchor_sample(c, tg);
                      if (a.empty()) return;
                      const auto [lo, hi] = std::minmax_element(a.begin(), a.end());
                      clip_targets(c, tg, *lo, *hi);
                  }, true));
    C("repair.temporal_then_cross", {}, [](const TimeSeriesFrame& f, const OperatorContext& ctx, const ParamMap&, auto&) {
        TimeSeriesFrame out = f;
        speed_clamp_min(out, ctx);
        cross_project(out, ctx, false);
        return out;
    });
    return r;
}

const OperatorRegistry& OperatorRegistry::defaults() {
    static const OperatorRegistry instance = with_defaults();
    return instance;
}

}  // namespace tsclean
