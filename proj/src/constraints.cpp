#include "tsclean/constraints.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tsclean/stats.hpp"

namespace tsclean {

void MinerConfig::validate() const {
    auto fail = [](const char* field) { throw std::invalid_argument(std::string("MinerConfig.") + field + " out of range"); };
    if (!(k_sigma > 0.0)) fail("k_sigma");
    if (variance_window < 2) fail("variance_window");
    if (!(corr_threshold > 0.0 && corr_threshold < 1.0)) fail("corr_threshold");
    if (!(r2_threshold > 0.0 && r2_threshold < 1.0)) fail("r2_threshold");
    if (!(residual_quantile > 0.0 && residual_quantile < 1.0)) fail("residual_quantile");
    if (!(coeff_prune_eps >= 0.0)) fail("coeff_prune_eps");
    if (!(mad_floor_frac >= 0.0)) fail("mad_floor_frac");
}

Interval robust_interval(std::span<const double> samples, double k, double floor_halfwidth) {
    std::vector<double> g(samples.begin(), samples.end());
    const double med = stats::median(g);
    const double sigma = stats::kMadScale * stats::mad(samples);
    if (sigma == 0.0) return {med - floor_halfwidth, med + floor_halfwidth};
    return {med - k * sigma, med + k * sigma};
}

std::optional<double> transition_value(const TimeSeriesFrame& frame, std::size_t t, std::size_t d, TemporalKind kind,
                                       std::size_t window) {
    switch (kind) {
        case TemporalKind::Speed:
            if (t < 1 || frame.missing(t, d) || frame.missing(t - 1, d)) return std::nullopt;
            return frame.value(t, d) - frame.value(t - 1, d);
        case TemporalKind::Acceleration:
            if (t < 2 || frame.missing(t, d) || frame.missing(t - 1, d) || frame.missing(t - 2, d)) return std::nullopt;
            return frame.value(t, d) - 2.0 * frame.value(t - 1, d) + frame.value(t - 2, d);
        case TemporalKind::Variance: {
            if (window < 2 || t + 1 < window) return std::nullopt;
            std::vector<double> w;
            w.reserve(window);
            for (std::size_t i = t + 1 - window; i <= t; ++i) {
                if (frame.missing(i, d)) return std::nullopt;
                w.push_back(frame.value(i, d));
            }
            return stats::variance(w);
        }
    }
    return std::nullopt;
}

std::vector<double> transition_samples(const TimeSeriesFrame& frame, std::size_t d, TemporalKind kind,
                                       std::size_t window) {
    std::vector<double> out;
    for (std::size_t t = 0; t < frame.rows(); ++t)
        if (auto v = transition_value(frame, t, d, kind, window)) out.push_back(*v);
    return out;
}

std::vector<TemporalConstraint> mine_temporal(const TimeSeriesFrame& frame, TemporalKind kind,
                                              const MinerConfig& config) {
    config.validate();
    const std::size_t window = kind == TemporalKind::Variance ? config.variance_window : 0;
    std::vector<TemporalConstraint> out;
    for (std::size_t d = 0; d < frame.cols(); ++d) {
        const auto samples = transition_samples(frame, d, kind, window);
        if (samples.size() < kMinTemporalSupport) continue;
        const auto range = stats::observed_range(frame, d);
        const double floor = config.mad_floor_frac * (range ? range->width() : 0.0);
        const auto iv = robust_interval(samples, config.k_sigma, floor);
        out.push_back({kind, d, iv.lo, iv.hi, window});
    }
    return out;
}

namespace {

struct Candidate {
    std::vector<std::size_t> vars;  // ascending; the last one is the target
};

bool is_subset(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

double pair_corr(const TimeSeriesFrame& frame, std::size_t a, std::size_t b) {
    std::vector<double> xs, ys;
    for (std::size_t t = 0; t < frame.rows(); ++t) {
        if (frame.missing(t, a) || frame.missing(t, b)) continue;
        xs.push_back(frame.value(t, a));
        ys.push_back(frame.value(t, b));
    }
    return stats::pearson(xs, ys);
}

// Monomials over the predictor positions of V (target position excluded), total degree <= max_degree.
std::vector<std::vector<int>> monomials(std::size_t v_size, std::size_t target, int max_degree) {
    std::vector<std::vector<int>> out;
    out.push_back(std::vector<int>(v_size, 0));
    for (std::size_t i = 0; i < v_size; ++i) {
        if (i == target) continue;
        std::vector<int> m(v_size, 0);
        m[i] = 1;
        out.push_back(m);
    }
    if (max_degree >= 2) {
        for (std::size_t i = 0; i < v_size; ++i) {
            if (i == target) continue;
            for (std::size_t j = i; j < v_size; ++j) {
                if (j == target) continue;
                std::vector<int> m(v_size, 0);
                m[i] += 1;
                m[j] += 1;
                out.push_back(m);
            }
        }
    }
    return out;
}

double monomial_value(const std::vector<int>& degrees, const std::vector<double>& xs) {
    double m = 1.0;
    for (std::size_t i = 0; i < degrees.size(); ++i)
        for (int p = 0; p < degrees[i]; ++p) m *= xs[i];
    return m;
}

std::optional<CrossConstraint> fit_candidate(const TimeSeriesFrame& frame, const Candidate& cand,
                                             const MinerConfig& config) {
    const std::size_t v_size = cand.vars.size();
    const std::size_t target = v_size - 1;
    std::vector<std::vector<double>> rows;
    for (std::size_t t = 0; t < frame.rows(); ++t) {
        std::vector<double> xs(v_size);
        bool ok = true;
        for (std::size_t i = 0; i < v_size && ok; ++i) {
            if (frame.missing(t, cand.vars[i])) ok = false;
            else xs[i] = frame.value(t, cand.vars[i]);
        }
        if (ok) rows.push_back(std::move(xs));
    }

    for (int degree = 1; degree <= 2; ++degree) {
        const auto monos = monomials(v_size, target, degree);
        const std::size_t n = rows.size();
        if (n < monos.size() + 2) return std::nullopt;
        Eigen::MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(monos.size()));
        Eigen::VectorXd y(static_cast<Eigen::Index>(n));
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t m = 0; m < monos.size(); ++m)
                X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(m)) = monomial_value(monos[m], rows[r]);
            y(static_cast<Eigen::Index>(r)) = rows[r][target];
        }
        const Eigen::VectorXd coef = X.colPivHouseholderQr().solve(y);
        const double ss_tot = (y.array() - y.mean()).square().sum();
        if (ss_tot <= 0.0) return std::nullopt;
        const double ss_res = (y - X * coef).squaredNorm();
        const double r2 = std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0);
        if (r2 < config.r2_threshold) continue;

        CrossConstraint c;
        c.variables = cand.vars;
        c.target = target;
        c.fit_r2 = r2;
        const double max_abs = coef.cwiseAbs().maxCoeff();
        for (std::size_t m = 0; m < monos.size(); ++m) {
            const double v = coef(static_cast<Eigen::Index>(m));
            if (std::abs(v) < config.coeff_prune_eps * max_abs) continue;
            c.terms.push_back({monos[m], v});
        }
        std::vector<int> tdeg(v_size, 0);
        tdeg[target] = 1;
        c.terms.push_back({tdeg, -1.0});

        std::vector<double> residuals;
        residuals.reserve(n);
        for (const auto& xs : rows) residuals.push_back(c.evaluate(xs));
        c.f_min = stats::quantile(residuals, 1.0 - config.residual_quantile);
        c.f_max = stats::quantile(residuals, config.residual_quantile);
        return c;
    }
    return std::nullopt;
}

}  // namespace

std::vector<CrossConstraint> mine_cross(const TimeSeriesFrame& frame, const MinerConfig& config) {
    config.validate();
    const std::size_t D = frame.cols();
    if (D < 2) return {};

    std::vector<std::vector<bool>> strong(D, std::vector<bool>(D, false));
    for (std::size_t a = 0; a < D; ++a)
        for (std::size_t b = a + 1; b < D; ++b) {
            const bool s = std::abs(pair_corr(frame, a, b)) >= config.corr_threshold;
            strong[a][b] = strong[b][a] = s;
        }

    // Larger candidate sets first so that redundant subsets can be dropped.
    std::vector<Candidate> candidates;
    for (std::size_t a = 0; a < D; ++a)
        for (std::size_t b = a + 1; b < D; ++b)
            for (std::size_t c = b + 1; c < D; ++c)
                if (strong[a][b] && strong[a][c] && strong[b][c]) candidates.push_back({{a, b, c}});
    for (std::size_t a = 0; a < D; ++a)
        for (std::size_t b = a + 1; b < D; ++b)
            if (strong[a][b]) candidates.push_back({{a, b}});

    std::vector<CrossConstraint> accepted;
    for (const auto& cand : candidates) {
        const bool redundant = std::any_of(accepted.begin(), accepted.end(),
                                           [&](const CrossConstraint& c) { return is_subset(cand.vars, c.variables); });
        if (redundant) continue;
        if (auto c = fit_candidate(frame, cand, config)) accepted.push_back(std::move(*c));
    }

    std::stable_sort(accepted.begin(), accepted.end(),
                     [](const CrossConstraint& a, const CrossConstraint& b) { return a.fit_r2 > b.fit_r2; });
    if (accepted.size() > D) accepted.resize(D);
    return accepted;
}

ConstraintSet mine_constraints(const TimeSeriesFrame& frame, const MinerConfig& config) {
    ConstraintSet set;
    set.schema = frame.names();
    for (auto kind : {TemporalKind::Speed, TemporalKind::Acceleration, TemporalKind::Variance}) {
        auto part = mine_temporal(frame, kind, config);
        set.temporal.insert(set.temporal.end(), part.begin(), part.end());
    }
    set.cross = mine_cross(frame, config);
    return set;
}

ViolationReport check_violations(const TimeSeriesFrame& frame, const ConstraintSet& constraints) {
    if (constraints.schema != frame.names()) throw DataError("constraint schema does not match frame variables");
    ViolationReport rep;
    rep.mask = CellMask(frame.rows(), frame.cols());
    rep.temporal_counts.assign(constraints.temporal.size(), 0);
    rep.cross_counts.assign(constraints.cross.size(), 0);

    for (std::size_t i = 0; i < constraints.temporal.size(); ++i) {
        const auto& c = constraints.temporal[i];
        if (c.variable >= frame.cols()) throw DataError("temporal constraint references unknown variable");
        for (std::size_t t = 0; t < frame.rows(); ++t) {
            const auto g = transition_value(frame, t, c.variable, c.kind, c.window);
            if (!g || (*g >= c.g_min && *g <= c.g_max)) continue;
            ++rep.temporal_counts[i];
            rep.mask.set(t, c.variable);
        }
    }
    for (std::size_t i = 0; i < constraints.cross.size(); ++i) {
        const auto& c = constraints.cross[i];
        for (auto v : c.variables)
            if (v >= frame.cols()) throw DataError("cross constraint references unknown variable");
        for (std::size_t t = 0; t < frame.rows(); ++t) {
            const auto f = c.evaluate(frame, t);
            if (!f || (*f >= c.f_min && *f <= c.f_max)) continue;
            ++rep.cross_counts[i];
            for (auto v : c.variables) rep.mask.set(t, v);
        }
    }
    return rep;
}

}  // namespace tsclean
