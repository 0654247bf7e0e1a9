#include <doctest.h>

#include <random>

#include "tsclean/quality.hpp"

using namespace tsclean;

namespace {

DetectorConfig zscore_only() { return DetectorConfig{.detectors = {{DetectorKind::ZScoreGlobal, 0}}}; }

}  // namespace

TEST_CASE("rates count missing, outlier and violation cells") {
    TimeSeriesFrame f({"a", "b"}, 10);
    const std::vector<Cell> b{std::nullopt, std::nullopt, 1.0, 1.0, 1.0, 1.0, 5.0, 5.0, 9.0, 13.0};
    for (std::size_t t = 0; t < 10; ++t) {
        f.set(t, 0, t == 5 ? 100.0 : 0.0);
        f.set(t, 1, b[t]);
    }
    ConstraintSet cs;
    cs.schema = {"a", "b"};
    cs.temporal.push_back({TemporalKind::Speed, 1, -0.5, 0.5, 0});

    const auto qa = assess(f, cs, zscore_only());
    CHECK(qa.rates.missing == doctest::Approx(0.10));
    CHECK(qa.rates.outlier == doctest::Approx(0.05));
    CHECK(qa.rates.violation == doctest::Approx(0.15));
    CHECK(qa.outlier.get(5, 0));
    CHECK(qa.violation.get(6, 1));
    CHECK(qa.violation.get(8, 1));
    CHECK(qa.violation.get(9, 1));
    CHECK(qa.rates == QualityRates::from_masks(qa.missing, qa.outlier, qa.violation));
}

TEST_CASE("a clean frame with no constraints has zero rates") {
    TimeSeriesFrame f({"a"}, 64);
    for (std::size_t t = 0; t < 64; ++t) f.set(t, 0, std::sin(0.3 * static_cast<double>(t)));
    ConstraintSet cs;
    cs.schema = {"a"};
    const auto qa = assess(f, cs, zscore_only());
    CHECK(qa.rates == QualityRates{});
    CHECK_THROWS_AS(assess(f, cs, DetectorConfig{}), std::invalid_argument);
    CHECK(resolve_detectors(f, DetectorConfig{}).detectors.size() == 3);
}

TEST_CASE("dominant issue and high-level state") {
    auto s = high_state({0.10, 0.05, 0.15}, std::nullopt, 0.5, 0, 10);
    CHECK(s.i_dom == IssueCategory::Violation);
    CHECK(high_state({0.1, 0.1, 0.1}, std::nullopt, 0.5, 0, 10).i_dom == IssueCategory::Missing);
    CHECK(high_state({0.0, 0.1, 0.1}, std::nullopt, 0.5, 0, 10).i_dom == IssueCategory::Outlier);
    CHECK(high_state({}, std::nullopt, 1.0, 0, 10).p_lite_bin == 4);
    CHECK(high_state({}, std::nullopt, 0.0, 0, 10).p_lite_bin == 0);
    CHECK(high_state({}, std::nullopt, 0.5, 10, 10).l_bin == 4);
    CHECK(high_state({}, std::nullopt, 0.5, 3, 10).l_bin == 1);
    CHECK(s.key() == "d=C|p=S|q=2|l=0");
    CHECK(high_state({}, IssueCategory::Outlier, 0.5, 0, 10).key() == "d=M|p=O|q=2|l=0");
}

TEST_CASE("high state depends on p_lite only through its bin") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        const double p = u(rng);
        const double lo = std::floor(p * 5.0) / 5.0;
        const double q = lo + 0.2 * u(rng) * 0.999;
        const QualityRates r{u(rng), u(rng), u(rng)};
        CHECK(high_state(r, IssueCategory::Missing, p, 2, 10) == high_state(r, IssueCategory::Missing, q, 2, 10));
        // argmax invariance under positive scaling
        const double k = 0.1 + 10.0 * u(rng);
        CHECK(dominant_issue(r) == dominant_issue({k * r.missing, k * r.outlier, k * r.violation}));
    }
}

TEST_CASE("bin cut points") {
    CHECK(skewness_bin(0.0) == 2);
    CHECK(skewness_bin(-2.0) == 0);
    CHECK(skewness_bin(1.0) == 3);
    CHECK(skewness_bin(9.0) == 4);
    CHECK(stationarity_bin(0.1) == 0);
    CHECK(stationarity_bin(2.0) == 3);
    CHECK(stationarity_bin(3.0) == 4);
    CHECK(uniform_bin(0.3, 0.25) == 4);
    CHECK(uniform_bin(0.06, 0.25) == 1);
}

TEST_CASE("low-level state features") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g(0.0, 1.0);
    TimeSeriesFrame f({"a", "b"}, 4000);
    for (std::size_t t = 0; t < f.rows(); ++t) {
        f.set(t, 0, g(rng));
        f.set(t, 1, g(rng));
    }
    const auto s = low_state(f, IssueCategory::Outlier);
    CHECK(s.skewness_bin == 2);
    CHECK(s.sparsity_bin == 0);
    CHECK(s.stationarity_bin == 3);  // ratio ~2
    CHECK(s.g == IssueCategory::Outlier);
    CHECK(s.key().rfind("g=O|", 0) == 0);

    CHECK_THROWS_AS(low_state(TimeSeriesFrame({"a"}, 4), IssueCategory::Missing), DataError);
}
