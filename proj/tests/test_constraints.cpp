#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "tsclean/constraints.hpp"
#include "tsclean/stats.hpp"

using namespace tsclean;

namespace {

TimeSeriesFrame series(const std::vector<double>& xs) {
    TimeSeriesFrame f({"x"}, xs.size());
    for (std::size_t t = 0; t < xs.size(); ++t) f.set(t, 0, xs[t]);
    return f;
}

// Smooth seasonal series with mild noise; the reference for the robustness checks.
std::vector<double> smooth_series(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> noise(0.0, 0.05);
    std::vector<double> xs(n);
    for (std::size_t t = 0; t < n; ++t) {
        const double tt = static_cast<double>(t);
        xs[t] = 10.0 + 3.0 * std::sin(2.0 * std::numbers::pi * tt / 48.0) + 0.01 * tt + noise(rng);
    }
    return xs;
}

// Oracle for the non-robust comparison: mean +- 3 * sample std.
Interval mean_std_interval(const std::vector<double>& g) {
    const double m = stats::mean(g);
    const double s = stats::stddev(g);
    return {m - 3.0 * s, m + 3.0 * s};
}

// Bound shift measured against the width of the clean interval.
double relative_shift(double clean, double dirty, const Interval& clean_iv) {
    return std::abs(dirty - clean) / (clean_iv.hi - clean_iv.lo);
}

}  // namespace

TEST_CASE("robust interval: hand-evaluated MAD bounds") {
    // median 3, |dev| = {2,1,0,1,97} -> MAD 1, sigma 1.48, bounds 3 -+ 4.44
    const std::vector<double> g{1, 2, 3, 4, 100};
    const auto iv = robust_interval(g, 3.0, 0.0);
    CHECK(iv.lo == doctest::Approx(-1.44).epsilon(1e-12));
    CHECK(iv.hi == doctest::Approx(7.44).epsilon(1e-12));
}

TEST_CASE("constant speed falls back to the MAD floor") {
    // x = 0, 5, 10, ... -> every speed is 5; range 45, floor half-width 0.01 * 45
    std::vector<double> xs;
    for (int i = 0; i < 10; ++i) xs.push_back(5.0 * i);
    const auto cs = mine_temporal(series(xs), TemporalKind::Speed);
    REQUIRE(cs.size() == 1);
    CHECK(cs[0].g_min == doctest::Approx(5.0 - 0.45));
    CHECK(cs[0].g_max == doctest::Approx(5.0 + 0.45));
}

TEST_CASE("variables with too few valid transitions are skipped") {
    TimeSeriesFrame f({"x"}, 12);
    for (std::size_t t : {0u, 1u, 3u, 4u, 6u, 7u, 9u, 10u}) f.set(t, 0, static_cast<double>(t));
    CHECK(transition_samples(f, 0, TemporalKind::Speed, 0).size() == 4);
    CHECK(mine_temporal(f, TemporalKind::Speed).empty());
}

TEST_CASE("transition kinds") {
    auto f = series({1, 2, 4, 7, 11, 16, 22, 29, 37, 46});
    CHECK(*transition_value(f, 3, 0, TemporalKind::Speed, 0) == 3.0);
    CHECK(*transition_value(f, 3, 0, TemporalKind::Acceleration, 0) == 1.0);
    CHECK_FALSE(transition_value(f, 1, 0, TemporalKind::Acceleration, 0).has_value());
    // variance of {1,2,4} with n-1 denominator = 7/3 * ... mean 7/3, sq dev sum = 14/3 -> 7/3
    CHECK(*transition_value(f, 2, 0, TemporalKind::Variance, 3) == doctest::Approx(7.0 / 3.0));
    auto vs = mine_temporal(f, TemporalKind::Variance, MinerConfig{.variance_window = 2});
    REQUIRE(vs.size() == 1);
    CHECK(vs[0].window == 2);
}

TEST_CASE("MAD bounds resist extreme outliers while mean/std bounds do not") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        std::mt19937_64 rng(seed);
        auto clean = smooth_series(512, rng);
        const auto range = *stats::observed_range(series(clean), 0);
        auto dirty = clean;
        std::vector<std::size_t> idx(dirty.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::shuffle(idx.begin(), idx.end(), rng);
        for (std::size_t i = 0; i < dirty.size() / 10; ++i) dirty[idx[i]] = 100.0 * range.width();

        const auto mc = mine_temporal(series(clean), TemporalKind::Speed)[0];
        const auto md = mine_temporal(series(dirty), TemporalKind::Speed)[0];
        const Interval mad_clean{mc.g_min, mc.g_max};
        CHECK(relative_shift(mc.g_min, md.g_min, mad_clean) < 0.15);
        CHECK(relative_shift(mc.g_max, md.g_max, mad_clean) < 0.15);

        const auto sc = mean_std_interval(transition_samples(series(clean), 0, TemporalKind::Speed, 0));
        const auto sd = mean_std_interval(transition_samples(series(dirty), 0, TemporalKind::Speed, 0));
        CHECK(relative_shift(sc.lo, sd.lo, sc) > 0.5);
        CHECK(relative_shift(sc.hi, sd.hi, sc) > 0.5);
    }
}

TEST_CASE("mined speed bounds cover clean transitions") {
    std::mt19937_64 rng(17);
    auto f = series(smooth_series(1000, rng));
    const auto c = mine_temporal(f, TemporalKind::Speed)[0];
    const auto g = transition_samples(f, 0, TemporalKind::Speed, 0);
    std::size_t inside = 0;
    for (double v : g) inside += (v >= c.g_min && v <= c.g_max) ? 1 : 0;
    CHECK(static_cast<double>(inside) / static_cast<double>(g.size()) >= 0.99);
}

TEST_CASE("planted linear relation is recovered") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    std::normal_distribution<double> noise(0.0, 0.01);
    TimeSeriesFrame f({"x1", "x2"}, 400);
    for (std::size_t t = 0; t < f.rows(); ++t) {
        const double x1 = u(rng);
        f.set(t, 0, x1);
        f.set(t, 1, 2.0 * x1 + 1.0 + noise(rng));
    }
    const auto cs = mine_cross(f);
    REQUIRE(cs.size() == 1);
    const auto& c = cs[0];
    CHECK(c.variables == std::vector<std::size_t>{0, 1});
    CHECK(c.fit_r2 > 0.999);
    double slope = 0, intercept = 0;
    for (const auto& term : c.terms) {
        if (term.degrees == std::vector<int>{1, 0}) slope = term.coef;
        if (term.degrees == std::vector<int>{0, 0}) intercept = term.coef;
    }
    CHECK(std::abs(slope - 2.0) / 2.0 < 0.05);
    CHECK(std::abs(intercept - 1.0) / 1.0 < 0.05);
    // bounds cover roughly +-3 sigma of the noise
    CHECK(c.f_max > 0.015);
    CHECK(c.f_max < 0.045);
    CHECK(c.f_min < -0.015);
    CHECK(c.f_min > -0.045);
}

TEST_CASE("quadratic relation needs the degree-2 terms") {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    TimeSeriesFrame f({"a", "b"}, 300);
    for (std::size_t t = 0; t < f.rows(); ++t) {
        const double a = u(rng);
        f.set(t, 0, a);
        f.set(t, 1, 0.5 * a * a + a);
    }
    const auto cs = mine_cross(f);
    REQUIRE(cs.size() == 1);
    bool has_square = false;
    for (const auto& term : cs[0].terms) has_square |= term.degrees == std::vector<int>{2, 0};
    CHECK(has_square);
}

TEST_CASE("independent noise columns give no cross constraint") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> g(0.0, 1.0);
    TimeSeriesFrame f({"a", "b"}, 500);
    for (std::size_t t = 0; t < f.rows(); ++t) {
        f.set(t, 0, g(rng));
        f.set(t, 1, g(rng));
    }
    CHECK(mine_cross(f).empty());
    CHECK(mine_cross(series({1, 2, 3, 4})).empty());
}

TEST_CASE("check_violations marking rules") {
    ConstraintSet cs;
    cs.schema = {"x"};
    cs.temporal.push_back({TemporalKind::Speed, 0, -2.0, 2.0, 0});
    auto rep = check_violations(series({0, 1, 10}), cs);
    CHECK_FALSE(rep.mask.get(0, 0));
    CHECK_FALSE(rep.mask.get(1, 0));
    CHECK(rep.mask.get(2, 0));
    CHECK(rep.temporal_counts[0] == 1);

    CHECK(check_violations(series({0, 1, 2}), cs).mask.popcount() == 0);

    ConstraintSet cross;
    cross.schema = {"a", "b"};
    CrossConstraint c;
    c.variables = {0, 1};
    c.target = 1;
    c.terms = {{{1, 0}, 1.0}, {{0, 1}, -1.0}};  // a - b
    c.f_min = -0.1;
    c.f_max = 0.1;
    cross.cross.push_back(c);
    TimeSeriesFrame f({"a", "b"}, 6);
    for (std::size_t t = 0; t < 6; ++t) {
        f.set(t, 0, static_cast<double>(t));
        f.set(t, 1, static_cast<double>(t));
    }
    f.set(4, 1, 9.0);
    auto r2 = check_violations(f, cross);
    CHECK(r2.mask.get(4, 0));
    CHECK(r2.mask.get(4, 1));
    CHECK(r2.mask.popcount() == 2);

    CHECK_THROWS_AS(check_violations(series({1, 2}), cross), DataError);
}

TEST_CASE("missing cells are never marked") {
    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 20; ++trial) {
        auto xs = smooth_series(200, rng);
        TimeSeriesFrame f({"a", "b"}, xs.size());
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (std::size_t t = 0; t < xs.size(); ++t) {
            if (u(rng) > 0.1) f.set(t, 0, xs[t] + (u(rng) < 0.05 ? 30.0 : 0.0));
            if (u(rng) > 0.1) f.set(t, 1, 2.0 * xs[t] + (u(rng) < 0.05 ? -30.0 : 0.0));
        }
        const auto cs = mine_constraints(f);
        const auto rep = check_violations(f, cs);
        for (std::size_t t = 0; t < f.rows(); ++t)
            for (std::size_t d = 0; d < 2; ++d)
                if (f.missing(t, d)) CHECK_FALSE(rep.mask.get(t, d));
    }
}

TEST_CASE("mining is deterministic") {
    std::mt19937_64 rng(41);
    auto xs = smooth_series(300, rng);
    TimeSeriesFrame f({"a", "b", "c"}, xs.size());
    for (std::size_t t = 0; t < xs.size(); ++t) {
        f.set(t, 0, xs[t]);
        f.set(t, 1, 3.0 * xs[t] - 2.0);
        f.set(t, 2, std::cos(static_cast<double>(t)));
    }
    CHECK(mine_constraints(f) == mine_constraints(f));
}

TEST_CASE("config validation") {
    CHECK_THROWS_AS(MinerConfig{.k_sigma = 0.0}.validate(), std::invalid_argument);
    CHECK_THROWS_AS(MinerConfig{.corr_threshold = 1.0}.validate(), std::invalid_argument);
    CHECK_NOTHROW(MinerConfig{}.validate());
}
