#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "tsclean/anomaly.hpp"
#include "tsclean/constraints.hpp"
#include "tsclean/operators.hpp"

using namespace tsclean;

namespace {

const OperatorRegistry& reg() { return OperatorRegistry::defaults(); }

TimeSeriesFrame series(const std::vector<Cell>& xs) {
    TimeSeriesFrame f({"x"}, xs.size());
    for (std::size_t t = 0; t < xs.size(); ++t) f.set(t, 0, xs[t]);
    return f;
}

ApplyResult run(const std::string& id, const TimeSeriesFrame& f, const OperatorContext& ctx = {}) {
    return reg().apply(reg().descriptor(id), f, ctx);
}

// Random two-variable frame with gaps, spikes and a linear coupling.
TimeSeriesFrame random_frame(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> g(0.0, 0.1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    TimeSeriesFrame f({"a", "b"}, n);
    for (std::size_t t = 0; t < n; ++t) {
        const double base = std::sin(0.2 * static_cast<double>(t)) * 5.0 + 10.0;
        if (u(rng) > 0.1) f.set(t, 0, base + g(rng) + (u(rng) < 0.05 ? 20.0 : 0.0));
        if (u(rng) > 0.1) f.set(t, 1, 2.0 * base + 1.0 + g(rng) + (u(rng) < 0.05 ? -15.0 : 0.0));
    }
    return f;
}

}  // namespace

TEST_CASE("default catalogue sizes") {
    CHECK(reg().list(IssueCategory::Missing).size() == 20);
    CHECK(reg().list(IssueCategory::Outlier).size() == 18);
    CHECK(reg().list(IssueCategory::Violation).size() == 10);
    CHECK(reg().size() == 48);
    std::set<std::string> ids;
    for (auto c : kAllCategories)
        for (const auto& d : reg().list(c)) {
            CHECK(d.category == c);
            ids.insert(d.id);
        }
    CHECK(ids.size() == 48);
}

TEST_CASE("imputer examples") {
    const auto lin = run("impute.linear", series({1.0, std::nullopt, 3.0}));
    CHECK(lin.frame.value(1, 0) == 2.0);
    CHECK(lin.cells_changed == 1);

    const auto ff = run("impute.ffill", series({std::nullopt, 5.0}));
    CHECK(ff.frame.missing(0, 0));
    CHECK(ff.cells_changed == 0);

    const auto bf = run("impute.bfill", series({std::nullopt, 5.0}));
    CHECK(bf.frame.value(0, 0) == 5.0);

    CHECK(run("impute.mean", series({1.0, std::nullopt, 5.0})).frame.value(1, 0) == 3.0);
    CHECK(run("impute.nearest", series({1.0, std::nullopt, std::nullopt, 7.0})).frame.value(1, 0) == 1.0);
    CHECK(run("impute.nearest", series({1.0, std::nullopt, std::nullopt, 7.0})).frame.value(2, 0) == 7.0);

    // a natural spline reproduces a straight line
    const auto sp = run("impute.spline", series({0.0, 1.0, std::nullopt, 3.0, 4.0, 5.0}));
    CHECK(sp.frame.value(2, 0) == doctest::Approx(2.0));
    const auto few = run("impute.spline", series({0.0, std::nullopt, 3.0, 4.0}));
    CHECK(few.cells_changed == 0);
    CHECK(few.warnings.size() == 1);

    // seasonal fill copies the same phase of the detected period
    std::vector<Cell> saw;
    for (int i = 0; i < 60; ++i) saw.push_back(static_cast<double>(i % 6));
    saw[20] = std::nullopt;
    CHECK(detect_period(saw) == 6);
    CHECK(run("impute.seasonal.auto", series(saw)).frame.value(20, 0) == 2.0);
}

TEST_CASE("random MAD imputer is deterministic and stays near the median") {
    std::vector<Cell> xs{1.0, 2.0, 3.0, std::nullopt, 4.0, 5.0, std::nullopt};
    const auto a = run("impute.random_mad", series(xs));
    const auto b = run("impute.random_mad", series(xs));
    CHECK(a.frame == b.frame);
    CHECK(a.cells_changed == 2);
    CHECK(std::abs(a.frame.value(3, 0) - 3.0) <= 1.48 + 1e-12);
}

TEST_CASE("speed clamp moves the violating cell onto the bound") {
    ConstraintSet cs;
    cs.schema = {"x"};
    cs.temporal.push_back({TemporalKind::Speed, 0, -2.0, 2.0, 0});
    const auto f = series({0.0, 10.0});
    OperatorContext ctx{&cs, CellMask(2, 1), check_violations(f, cs).mask};
    const auto r = run("repair.speed_clamp_min", f, ctx);
    CHECK(r.frame.value(1, 0) == 2.0);
    CHECK(r.cells_changed == 1);
}

TEST_CASE("cross projection restores the relation on flagged rows") {
    ConstraintSet cs;
    cs.schema = {"a", "b"};
    CrossConstraint c;
    c.variables = {0, 1};
    c.target = 1;
    c.terms = {{{1, 0}, 2.0}, {{0, 0}, 1.0}, {{0, 1}, -1.0}};  // 2a + 1 - b
    c.f_min = -0.1;
    c.f_max = 0.1;
    cs.cross.push_back(c);
    TimeSeriesFrame f({"a", "b"}, 4);
    for (std::size_t t = 0; t < 4; ++t) {
        f.set(t, 0, static_cast<double>(t));
        f.set(t, 1, 2.0 * static_cast<double>(t) + 1.0);
    }
    f.set(2, 1, 20.0);
    OperatorContext ctx{&cs, CellMask(4, 2), check_violations(f, cs).mask};
    const auto r = run("repair.cross_target", f, ctx);
    CHECK(r.frame.value(2, 1) == doctest::Approx(5.1));
    CHECK(r.frame.value(2, 0) == 2.0);
    const auto l = run("repair.cross_least_corr", f, ctx);
    CHECK(*c.evaluate(l.frame, 2) <= 0.1 + 1e-9);
}

TEST_CASE("outlier repairs only touch flagged cells") {
    auto f = series({1.0, 2.0, 3.0, 50.0, 5.0, 6.0, 7.0});
    CellMask om(7, 1);
    om.set(3, 0);
    OperatorContext ctx{nullptr, om, CellMask(7, 1)};
    const auto r = run("outlier.linear", f, ctx);
    CHECK(r.frame.value(3, 0) == 4.0);
    CHECK(r.cells_changed == 1);
    CHECK(run("outlier.neighbor_mean", f, ctx).frame.value(3, 0) == 4.0);
    CHECK(run("outlier.prev_value", f, ctx).frame.value(3, 0) == 3.0);
    CHECK(run("outlier.median_filter.w3", f, ctx).frame.value(3, 0) == 5.0);
    // without a mask nothing may change
    CHECK(run("outlier.linear", f).cells_changed == 0);
}

TEST_CASE("category masking, purity and monotone missingness for every operator") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 6; ++trial) {
        const auto f = random_frame(rng, 120);
        const auto cs = mine_constraints(f);
        const auto outl = flag(score(f, detector_pool()), 0.3);
        const auto viol = check_violations(f, cs).mask;
        const OperatorContext ctx{&cs, outl, viol};
        const TimeSeriesFrame before = f;
        for (auto cat : kAllCategories) {
            for (const auto& op : reg().list(cat)) {
                const auto r = reg().apply(op, f, ctx);
                CHECK(f == before);
                CHECK(r.frame == reg().apply(op, f, ctx).frame);
                CHECK(r.frame.missing_count() <= f.missing_count());
                std::size_t changed = 0;
                for (std::size_t t = 0; t < f.rows(); ++t)
                    for (std::size_t d = 0; d < f.cols(); ++d) {
                        if (r.frame.at(t, d) == f.at(t, d)) continue;
                        ++changed;
                        const bool allowed = cat == IssueCategory::Missing   ? f.missing(t, d)
                                             : cat == IssueCategory::Outlier ? outl.get(t, d)
                                                                             : viol.get(t, d);
                        CHECK_MESSAGE(allowed, op.id);
                        CHECK(std::isfinite(r.frame.value(t, d)));
                    }
                CHECK(changed == r.cells_changed);
                if (cat == IssueCategory::Missing) CHECK_MESSAGE(r.cells_changed > 0, op.id);
            }
        }
    }
}

TEST_CASE("registration appends and rejects duplicates") {
    auto r = OperatorRegistry::with_defaults();
    auto identity = [](const TimeSeriesFrame& f, const OperatorContext&, const ParamMap&, std::vector<std::string>&) { return f; };
    r.register_op({"custom.x", IssueCategory::Missing, {}}, identity);
    CHECK(r.list(IssueCategory::Missing).size() == 21);
    CHECK(r.list(IssueCategory::Missing).back().id == "custom.x");
    CHECK_THROWS_AS(r.register_op({"custom.x", IssueCategory::Missing, {}}, identity), std::invalid_argument);
    r.register_op({"custom.c", IssueCategory::Violation, {}}, identity);
    CHECK(r.list(IssueCategory::Violation).back().id == "custom.c");
    CHECK(r.list(IssueCategory::Outlier).size() == 18);

    auto throwing = [](const TimeSeriesFrame&, const OperatorContext&, const ParamMap&, std::vector<std::string>&) -> TimeSeriesFrame {
        throw std::runtime_error("boom");
    };
    r.register_op({"custom.boom", IssueCategory::Outlier, {}}, throwing);
    const auto f = series({1.0, 2.0});
    const auto res = r.apply(r.descriptor("custom.boom"), f, {});
    CHECK(res.frame == f);
    CHECK(res.warnings.size() == 1);
    CHECK_THROWS_AS(r.descriptor("nope"), std::out_of_range);

    const auto sub = OperatorRegistry::defaults().subset({"impute.linear", "outlier.mad_clip.k3"});
    CHECK(sub.size() == 2);
    CHECK(sub.list(IssueCategory::Violation).empty());
}
