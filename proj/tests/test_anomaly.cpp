#include <doctest.h>

#include <algorithm>
#include <random>

#include "tsclean/anomaly.hpp"
#include "tsclean/stats.hpp"

using namespace tsclean;

namespace {

TimeSeriesFrame series(const std::vector<double>& xs) {
    TimeSeriesFrame f({"x"}, xs.size());
    for (std::size_t t = 0; t < xs.size(); ++t) f.set(t, 0, xs[t]);
    return f;
}

std::vector<double> white_noise(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> xs(n);
    for (double& x : xs) x = g(rng);
    return xs;
}

std::vector<DetectorKind> kinds(const std::vector<DetectorId>& ids) {
    std::vector<DetectorKind> out;
    for (const auto& id : ids) out.push_back(id.kind);
    return out;
}

}  // namespace

TEST_CASE("meta features: ramp, white noise, all missing") {
    std::vector<double> ramp;
    for (int i = 0; i < 50; ++i) ramp.push_back(2.0 * i + 1.0);
    CHECK(meta_features(series(ramp)).trend_strength == doctest::Approx(1.0));

    // iid noise: var(x_t - x_{t-1}) = 2 var(x)
    const auto m = meta_features(series(white_noise(20000, 3)));
    CHECK(m.stationarity_ratio == doctest::Approx(2.0).epsilon(0.05));
    CHECK(m.trend_strength < 0.05);
    CHECK(std::abs(m.kurtosis) < 0.2);
    CHECK(m.missing_frac == 0.0);

    CHECK_THROWS_AS(meta_features(TimeSeriesFrame({"a", "b"}, 5)), DataError);

    TimeSeriesFrame partial({"a", "b"}, 50);
    for (std::size_t t = 0; t < 50; ++t) partial.set(t, 0, ramp[t]);
    const auto mp = meta_features(partial);
    CHECK(mp.trend_strength == doctest::Approx(1.0));
    CHECK(mp.missing_frac == doctest::Approx(0.5));
}

TEST_CASE("seasonality picks up a periodic signal") {
    std::vector<double> xs;
    for (int i = 0; i < 200; ++i) xs.push_back(i % 10 < 5 ? 1.0 : -1.0);
    CHECK(meta_features(series(xs)).seasonality_strength > 0.8);
}

TEST_CASE("detector selection rule") {
    MetaFeatures heavy{.trend_strength = 0.1, .kurtosis = 5.0};
    CHECK(kinds(select_detectors(heavy, 2)) == std::vector{DetectorKind::MADGlobal, DetectorKind::HampelFlag});

    MetaFeatures trend{.trend_strength = 0.9, .kurtosis = 0.0};
    CHECK(kinds(select_detectors(trend, 2)) == std::vector{DetectorKind::RollingZScore, DetectorKind::DiffSpike});

    MetaFeatures plain{};
    CHECK(kinds(select_detectors(plain, 2)) == std::vector{DetectorKind::ZScoreGlobal, DetectorKind::IQRGlobal});

    const auto all = select_detectors(heavy, 100);
    CHECK(all.size() == detector_pool().size());
    CHECK(kinds(all) == std::vector{DetectorKind::MADGlobal, DetectorKind::HampelFlag, DetectorKind::ZScoreGlobal,
                                    DetectorKind::IQRGlobal, DetectorKind::RollingZScore, DetectorKind::DiffSpike});
    CHECK_THROWS_AS(select_detectors(plain, 0), std::invalid_argument);
}

TEST_CASE("detector names round-trip") {
    for (const auto& id : detector_pool()) CHECK(DetectorId::parse(id.name()) == id);
    CHECK_THROWS_AS(DetectorId::parse("isolation_forest"), std::invalid_argument);
    CHECK_THROWS_AS(DetectorId::parse("hampel"), std::invalid_argument);
}

TEST_CASE("score normalization and fusion") {
    // constant raw scores normalize to zero
    const auto flat = score(series({4, 4, 4, 4}), {{DetectorKind::ZScoreGlobal, 0}});
    CHECK(std::all_of(flat.values.begin(), flat.values.end(), [](double v) { return v == 0.0; }));

    const auto s = score(series({0, 0, 0, 100, 0, 0}), {{DetectorKind::ZScoreGlobal, 0}});
    const auto top = std::max_element(s.values.begin(), s.values.end()) - s.values.begin();
    CHECK(top == 3);
    CHECK(s.at(3, 0) == 1.0);

    // fused = mean of per-detector normalized scores
    const auto f = series({1, 2, 3, 50, 4, 5, 6, 7});
    const DetectorId a{DetectorKind::ZScoreGlobal, 0}, b{DetectorKind::DiffSpike, 0};
    const auto sa = score(f, {a}), sb = score(f, {b}), sab = score(f, {a, b}), sba = score(f, {b, a});
    for (std::size_t t = 0; t < f.rows(); ++t) {
        CHECK(sab.at(t, 0) == doctest::Approx((sa.at(t, 0) + sb.at(t, 0)) / 2.0));
        CHECK(sab.at(t, 0) == doctest::Approx(sba.at(t, 0)));
    }
    CHECK_THROWS_AS(score(f, {}), std::invalid_argument);
}

TEST_CASE("missing cells score zero and are never flagged") {
    TimeSeriesFrame f({"a"}, 6);
    for (std::size_t t : {0u, 1u, 3u, 4u, 5u}) f.set(t, 0, t == 4 ? 40.0 : 1.0 * t);
    const auto s = score(f, detector_pool());
    CHECK(s.at(2, 0) == 0.0);
    for (double v : s.values) CHECK((v >= 0.0 && v <= 1.0));
    const auto mask = flag(s, 0.01);
    CHECK_FALSE(mask.get(2, 0));
}

TEST_CASE("flag thresholding") {
    ScoreMatrix s(3, 2);
    CHECK(flag(s, 0.8).popcount() == 0);
    s.at(1, 1) = 0.95;
    s.at(2, 0) = 0.8;
    const auto m = flag(s, 0.8);
    CHECK(m.popcount() == 1);
    CHECK(m.get(1, 1));
    CHECK_THROWS_AS(flag(s, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(flag(s, 1.0), std::invalid_argument);
}

TEST_CASE("a 10 sigma spike tops every subset holding a global z or MAD detector") {
    const auto pool = detector_pool();
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto xs = white_noise(300, seed);
        const double sd = stats::stddev(xs);
        const std::size_t spike = 40 + 37 * seed;
        xs[spike] += 10.0 * sd;
        const auto f = series(xs);
        for (unsigned bits = 1; bits < (1u << pool.size()); ++bits) {
            std::vector<DetectorId> subset;
            for (std::size_t i = 0; i < pool.size(); ++i)
                if (bits & (1u << i)) subset.push_back(pool[i]);
            const bool anchored = std::any_of(subset.begin(), subset.end(), [](const DetectorId& d) {
                return d.kind == DetectorKind::ZScoreGlobal || d.kind == DetectorKind::MADGlobal;
            });
            if (!anchored) continue;
            const auto s = score(f, subset);
            const auto top = static_cast<std::size_t>(std::max_element(s.values.begin(), s.values.end()) - s.values.begin());
            CHECK(top == spike);
        }
    }
}
