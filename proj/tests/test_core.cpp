#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "tsclean/frame.hpp"
#include "tsclean/serialize.hpp"

using namespace tsclean;

TEST_CASE("minimal valid frame") {
    TimeSeriesFrame f({"a"}, {{1.0}, {2.0}});
    CHECK(validate_frame(f).empty());
    CHECK(validate_cells({0, 1}, {{1.0}, {2.0}}, 1, true).empty());
}

TEST_CASE("duplicate index after preprocessing is a violation") {
    auto v = validate_cells({0, 0}, {{1.0}, {2.0}}, 1, true);
    REQUIRE(v.size() == 1);
    CHECK(v[0].message == "non-strict timestamps");
    CHECK(v[0].row == 1u);
    // Before preprocessing duplicates are allowed.
    CHECK(validate_cells({0, 0}, {{1.0}, {2.0}}, 1, false).empty());
}

TEST_CASE("non-finite cell is reported with coordinates") {
    TimeSeriesFrame f({"a", "b"}, {{1.0, 2.0}, {std::numeric_limits<double>::infinity(), 3.0}});
    auto v = validate_frame(f);
    REQUIRE(v.size() == 1);
    CHECK(v[0].message == "non-finite cell");
    CHECK(v[0].row == 1u);
    CHECK(v[0].col == 0u);
}

TEST_CASE("frames need two rows and one column") {
    CHECK_FALSE(validate_frame(TimeSeriesFrame({"a"}, {{1.0}})).empty());
    CHECK_FALSE(validate_frame(TimeSeriesFrame({}, 3)).empty());
}

TEST_CASE("cell_count") {
    CHECK(cell_count(TimeSeriesFrame({"a", "b"}, 10)) == 20);
    CHECK(cell_count(TimeSeriesFrame({"a"}, 2)) == 2);
    CHECK(cell_count(TimeSeriesFrame({"x", "y"}, 45)) == 90);
}

TEST_CASE("ragged rows are rejected") {
    CHECK_THROWS_AS(TimeSeriesFrame({"a", "b"}, {{1.0, 2.0}, {1.0}}), std::invalid_argument);
}

TEST_CASE("quality rates equal popcount over cell count") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t rows = 2 + rng() % 30, cols = 1 + rng() % 5;
        CellMask m(rows, cols), o(rows, cols), c(rows, cols);
        std::size_t nm = 0, no = 0, nc = 0;
        for (std::size_t t = 0; t < rows; ++t)
            for (std::size_t d = 0; d < cols; ++d) {
                if (rng() % 3 == 0) { m.set(t, d); ++nm; }
                if (rng() % 4 == 0) { o.set(t, d); ++no; }
                if (rng() % 5 == 0) { c.set(t, d); ++nc; }
            }
        const auto r = QualityRates::from_masks(m, o, c);
        const double n = static_cast<double>(rows * cols);
        CHECK(r.missing == static_cast<double>(nm) / n);
        CHECK(r.outlier == static_cast<double>(no) / n);
        CHECK(r.violation == static_cast<double>(nc) / n);
    }
}

TEST_CASE("cross constraint evaluation") {
    CrossConstraint c;
    c.variables = {0, 1};
    c.target = 1;
    c.terms = {{{0, 0}, 1.0}, {{1, 0}, 2.0}, {{0, 1}, -1.0}};
    CHECK(c.evaluate(std::vector<double>{3.0, 7.0}) == doctest::Approx(0.0));
    TimeSeriesFrame f({"a", "b"}, {{3.0, 8.0}, {std::nullopt, 1.0}});
    CHECK(*c.evaluate(f, 0) == doctest::Approx(-1.0));
    CHECK_FALSE(c.evaluate(f, 1).has_value());
}

namespace {

TimeSeriesFrame random_frame(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> val(-1e6, 1e6);
    const std::size_t rows = 2 + rng() % 20, cols = 1 + rng() % 4;
    std::vector<std::string> names;
    for (std::size_t d = 0; d < cols; ++d) names.push_back("v" + std::to_string(d));
    TimeSeriesFrame f(names, rows);
    for (std::size_t t = 0; t < rows; ++t)
        for (std::size_t d = 0; d < cols; ++d)
            if (rng() % 5 != 0) f.set(t, d, val(rng));
    f.set_time_axis(static_cast<std::int64_t>(rng() % 1000), 1 + static_cast<std::int64_t>(rng() % 60));
    return f;
}

template <class T>
T round_trip(const T& v) {
    return json::parse(json(v).dump()).get<T>();
}

}  // namespace

TEST_CASE("core types survive a JSON round trip") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int trial = 0; trial < 25; ++trial) {
        const auto f = random_frame(rng);
        CHECK(round_trip(f) == f);

        ConstraintSet cs;
        cs.schema = f.names();
        cs.temporal.push_back({TemporalKind::Speed, 0, u(rng), 20.0 + u(rng), 0});
        cs.temporal.push_back({TemporalKind::Variance, 0, 0.0, 50.0 + u(rng), 8});
        CrossConstraint cc;
        cc.variables = {0, 1};
        cc.target = 1;
        cc.terms = {{{1, 0}, u(rng)}, {{2, 0}, u(rng)}, {{0, 1}, -1.0}};
        cc.f_min = -1.0;
        cc.f_max = 1.0;
        cc.fit_r2 = 0.95;
        cs.cross.push_back(cc);
        CHECK(round_trip(cs) == cs);

        PipelineStep step;
        step.op = {"impute.linear", IssueCategory::Missing, {{"w", std::int64_t{5}}, {"alpha", 0.3}, {"mode", std::string("auto")}}};
        step.pre_rates = {u(rng) * 0.01 + 0.1, 0.2, 0.3};
        step.post_rates = {0.0, 0.1, 0.2};
        step.reward = {u(rng), u(rng), u(rng), u(rng), u(rng), u(rng), 5.0, u(rng), u(rng)};
        step.cells_changed = rng() % 100;
        CHECK(round_trip(step) == step);

        EvaluationReport rep{0.5, std::nullopt, u(rng), 0.4, 0.6, 0.2, TaskKind::Cluster};
        CHECK(round_trip(rep) == rep);
    }
}
