#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "tsclean/bench.hpp"
#include "tsclean/constraints.hpp"

using namespace tsclean;

namespace {

InjectionSpec nothing() {
    return InjectionSpec{.duplicate_rate = 0, .missing_rate = 0, .point_outlier_rate = 0, .segment_outlier_rate = 0,
                         .violation_rate = 0, .noise_sigma = 0};
}

TimeSeriesFrame ramp(std::size_t rows, std::size_t cols) {
    std::vector<std::string> names;
    for (std::size_t d = 0; d < cols; ++d) names.push_back("v" + std::to_string(d));
    TimeSeriesFrame f(names, rows);
    for (std::size_t t = 0; t < rows; ++t)
        for (std::size_t d = 0; d < cols; ++d) f.set(t, d, static_cast<double>(t + 3 * d) + std::sin(0.7 * t));
    return f;
}

}  // namespace

TEST_CASE("corpora: shapes, determinism, unknown id") {
    const auto f = make_synthetic("forecast-sine-trend", 0);
    CHECK(f.frame.rows() == 512);
    CHECK(f.frame.cols() == 4);
    const auto c = make_synthetic("classify-shapes", 0);
    CHECK(c.frame.rows() == 120 * 64);
    CHECK(c.task.labels.size() == 120);
    const auto k = make_synthetic("cluster-blobs", 0);
    CHECK(k.frame.rows() == 90 * 64);
    CHECK(k.task.k == 3);
    CHECK(make_synthetic("cluster-blobs", 5).frame == make_synthetic("cluster-blobs", 5).frame);
    CHECK_THROWS_AS(make_synthetic("no-such-corpus", 0), std::invalid_argument);
}

TEST_CASE("forecast corpus carries the planted cross relation") {
    const auto c = make_synthetic("forecast-sine-trend", 1);
    const auto cs = mine_constraints(c.frame, MinerConfig{});
    bool found = false;
    for (const auto& cc : cs.cross) {
        const auto& v = cc.variables;
        if (std::find(v.begin(), v.end(), 0) != v.end() && std::find(v.begin(), v.end(), 1) != v.end()) found = true;
    }
    CHECK(found);
}

TEST_CASE("zero rates and zero noise leave the frame alone") {
    const auto clean = ramp(30, 2);
    const auto r = inject(clean, nothing());
    CHECK(r.dirty == clean);
    CHECK(r.ledger.corrupted().popcount() == 0);
    CHECK(r.raw.rows.size() == 30);
}

TEST_CASE("missing rate 0.1 on 20 cells blanks exactly two") {
    auto spec = nothing();
    spec.missing_rate = 0.1;
    const auto r = inject(ramp(10, 2), spec);
    CHECK(r.dirty.missing_count() == 2);
    CHECK(r.ledger.missing.popcount() == 2);
}

TEST_CASE("injection: rates, disjoint masks, completeness, determinism") {
    const auto c = make_synthetic("forecast-sine-trend", 2);
    InjectionSpec spec{.seed = 7};
    const auto a = inject(c.frame, spec);
    const auto b = inject(c.frame, spec);
    CHECK(a.dirty == b.dirty);
    CHECK(a.raw == b.raw);

    const double N = static_cast<double>(cell_count(c.frame));
    const auto& l = a.ledger;
    for (const CellMask* m : {&l.missing, &l.point_outlier, &l.segment_outlier, &l.violation})
        CHECK(std::abs(static_cast<double>(m->popcount()) / N - 0.05) <= 1.0 / N);
    CHECK(l.corrupted().popcount() ==
          l.missing.popcount() + l.point_outlier.popcount() + l.segment_outlier.popcount() + l.violation.popcount());

    // with the noise removed, every changed cell is in the ledger
    spec.noise_sigma = 0.0;
    const auto q = inject(c.frame, spec);
    const auto all = q.ledger.corrupted();
    for (std::size_t t = 0; t < c.frame.rows(); ++t)
        for (std::size_t d = 0; d < c.frame.cols(); ++d)
            if (q.dirty.at(t, d) != c.frame.at(t, d)) CHECK(all.get(t, d));

    // duplicates live in the raw rows and collapse back on preprocessing
    CHECK(a.raw.rows.size() == c.frame.rows() + a.ledger.duplicate_rows.size());
    CHECK(preprocess(a.raw).frame == a.dirty);
}

TEST_CASE("injected violations break the speed bound mined on the clean frame") {
    const auto c = make_synthetic("forecast-sine-trend", 3);
    auto spec = nothing();
    spec.violation_rate = 0.05;
    spec.seed = 3;
    const auto r = inject(c.frame, spec);
    const auto cs = mine_constraints(c.frame, MinerConfig{});
    const auto report = check_violations(r.dirty, cs);
    std::size_t caught = 0;
    for (std::size_t t = 0; t < c.frame.rows(); ++t)
        for (std::size_t d = 0; d < c.frame.cols(); ++d)
            if (r.ledger.violation.get(t, d) && report.mask.get(t, d)) ++caught;
    CHECK(caught == r.ledger.violation.popcount());
}

TEST_CASE("over-corruption is refused") {
    auto spec = nothing();
    spec.missing_rate = 0.5;
    spec.point_outlier_rate = 0.45;
    CHECK_THROWS_AS(inject(ramp(20, 2), spec), DataError);
    InjectionSpec bad;
    bad.segment_min = 1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("ledger JSON round trip") {
    const auto r = inject(ramp(40, 2), InjectionSpec{.seed = 1});
    const json j = r.ledger;
    CHECK(j.get<GroundTruthLedger>() == r.ledger);
}

TEST_CASE("upstream metric identities and the hand-computed case") {
    TimeSeriesFrame clean({"a"}, 4), dirty({"a"}, 4), fixed({"a"}, 4);
    for (std::size_t t = 0; t < 4; ++t) {
        clean.set(t, 0, 10.0);
        dirty.set(t, 0, 10.0);
        fixed.set(t, 0, 10.0);
    }
    dirty.set(2, 0, 20.0);
    fixed.set(2, 0, 12.0);
    GroundTruthLedger l;
    l.clean = clean;
    l.missing = l.segment_outlier = l.violation = CellMask(4, 1);
    l.point_outlier = CellMask(4, 1);
    l.point_outlier.set(2, 0);

    const auto m = upstream_metrics(dirty, fixed, l, l.point_outlier);
    CHECK(*m.nmse == doctest::Approx(0.04));
    CHECK(*m.rra == doctest::Approx(0.8));
    CHECK(*m.f1 == 1.0);

    const auto perfect = upstream_metrics(dirty, clean, l, l.point_outlier);
    CHECK(std::abs(*perfect.nmse) <= 1e-12);
    CHECK(*perfect.rra == 1.0);
    CHECK(*upstream_metrics(dirty, dirty, l, l.point_outlier).rra == 0.0);

    GroundTruthLedger empty = l;
    empty.point_outlier = CellMask(4, 1);
    const auto none = upstream_metrics(dirty, fixed, empty, CellMask(4, 1));
    CHECK_FALSE(none.f1.has_value());
    CHECK_FALSE(none.nmse.has_value());
    CHECK_FALSE(none.rra.has_value());
}

TEST_CASE("sampling baseline") {
    const auto c = make_synthetic("forecast-sine-trend", 0);
    const auto dirty = inject(c.frame, InjectionSpec{.seed = 0}).dirty;
    const auto reg = OperatorRegistry::defaults();
    const Environment env(dirty, reg, c.task, MinerConfig{}, DetectorConfig{}, RewardWeights{});
    const auto a = sampling_baseline(env, 1, 3, 5);
    const auto b = sampling_baseline(env, 1, 3, 5);
    CHECK(a.best == b.best);
    CHECK(a.rewards == b.rewards);
    CHECK(a.best.size() == 1);
    CHECK(a.rewards.size() == 5);
    CHECK(a.best_reward == *std::max_element(a.rewards.begin(), a.rewards.end()));
    CHECK(env.sparse(a.cleaned) == a.best_reward);
    const auto one = sampling_baseline(env, 4, 8, 1);
    CHECK(one.best.size() >= 1);
    CHECK(one.best.size() <= 4);
}
