#include <doctest.h>

#include <cmath>
#include <random>

#include "tsclean/agents.hpp"

using namespace tsclean;

namespace {

HighState some_state() { return HighState{IssueCategory::Outlier, IssueCategory::Missing, 2, 1}; }

}  // namespace

TEST_CASE("missing data forces M without reading the table") {
    AgentBundle b = AgentBundle::for_registry(OperatorRegistry::defaults());
    b.high.set(some_state().key(), 1, 100.0);
    std::mt19937_64 rng(1);
    ReadCounter reads;
    const auto m = high_mask(QualityRates{0.01, 0.2, 0.2}, 3, IssueCategory::Missing);
    CHECK(m.forced_m);
    for (bool explore : {false, true}) CHECK(select_high(b, some_state(), m, explore, rng, &reads) == HighAction::M);
    CHECK(reads.reads == 0);
}

TEST_CASE("high mask: M off once data is complete, F off at step 0, blocked category off") {
    const QualityRates r{0.0, 0.1, 0.1};
    auto m0 = high_mask(r, 0, std::nullopt);
    CHECK(m0.allowed == std::array<bool, 4>{false, true, true, false});
    auto m1 = high_mask(r, 1, IssueCategory::Outlier);
    CHECK(m1.allowed == std::array<bool, 4>{false, false, true, true});
    // blocking the only remaining action is ignored
    auto only = high_mask(r, 0, IssueCategory::Outlier);
    CHECK(only.allowed == std::array<bool, 4>{false, false, true, false});
    auto none_left = high_mask(QualityRates{}, 0, IssueCategory::Violation);
    CHECK(none_left.allowed[1]);
}

TEST_CASE("greedy selection reads each allowed Q once and breaks ties low") {
    AgentBundle b = AgentBundle::for_registry(OperatorRegistry::defaults());
    std::mt19937_64 rng(0);
    ReadCounter reads;
    const auto m = high_mask(QualityRates{0.0, 0.1, 0.1}, 2, std::nullopt);
    CHECK(select_high(b, some_state(), m, false, rng, &reads) == HighAction::O);
    CHECK(reads.reads == 3);
    b.high.set(some_state().key(), 3, 0.5);
    CHECK(select_high(b, some_state(), m, false, rng) == HighAction::F);

    const LowState ls{IssueCategory::Missing, 0, 0, 0, 0};
    ReadCounter low_reads;
    CHECK(select_low(b, ls, IssueCategory::Missing, false, rng, std::nullopt, &low_reads) == 0);
    CHECK(low_reads.reads == 20);
    CHECK(select_low(b, ls, IssueCategory::Missing, false, rng, std::size_t{0}) == 1);
}

TEST_CASE("argmax examples") {
    AgentBundle b = AgentBundle::for_registry(OperatorRegistry::defaults().subset(
        {"impute.linear", "outlier.hampel.w5", "outlier.hampel.w9", "outlier.iqr_clip", "repair.speed_clamp_min"}));
    std::mt19937_64 rng(0);
    const auto key = some_state().key();
    b.high.set(key, 1, 0.2);
    b.high.set(key, 2, 0.9);
    b.high.set(key, 3, 0.1);
    CHECK(select_high(b, some_state(), high_mask(QualityRates{}, 1, std::nullopt), false, rng) == HighAction::C);

    const LowState ls{IssueCategory::Outlier, 1, 0, 2, 3};
    b.low[1].set(ls.key(), 0, 0.1);
    b.low[1].set(ls.key(), 1, 0.7);
    b.low[1].set(ls.key(), 2, 0.3);
    CHECK(select_low(b, ls, IssueCategory::Outlier, false, rng) == 1);
}

TEST_CASE("low-level exploration is uniform over the category") {
    AgentBundle b = AgentBundle::for_registry(OperatorRegistry::defaults());
    b.epsilon = 1.0;
    std::mt19937_64 rng(5);
    const LowState ls{IssueCategory::Violation, 0, 0, 0, 0};
    const std::size_t n = 10000, k = b.low[2].actions();
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) ++counts[select_low(b, ls, IssueCategory::Violation, true, rng)];
    const double p = 1.0 / static_cast<double>(k), mean = p * n, sd = std::sqrt(n * p * (1.0 - p));
    for (auto c : counts) CHECK(std::abs(static_cast<double>(c) - mean) <= 3.0 * sd);
}

TEST_CASE("exploration stays inside the mask") {
    AgentBundle b = AgentBundle::for_registry(OperatorRegistry::defaults());
    b.epsilon = 1.0;
    std::mt19937_64 rng(9);
    const auto m = high_mask(QualityRates{0.0, 0.1, 0.1}, 0, std::nullopt);
    bool seen[4] = {};
    for (int i = 0; i < 200; ++i) seen[static_cast<int>(select_high(b, some_state(), m, true, rng))] = true;
    CHECK_FALSE(seen[0]);
    CHECK(seen[1]);
    CHECK(seen[2]);
    CHECK_FALSE(seen[3]);
}

TEST_CASE("Q update") {
    QTable t(2);
    const Hyper h;
    t.set("next", 0, 1.0);
    t.set("next", 1, 3.0);
    q_update(t, h, "s", 0, 1.0, "next", {true, false}, false);
    CHECK(t.get("s", 0) == doctest::Approx(0.1 * (1.0 + 0.9 * 1.0)));
    q_update(t, h, "s", 1, 2.0, "next", {true, true}, true);
    CHECK(t.get("s", 1) == doctest::Approx(0.2));
    CHECK_THROWS_AS(q_update(t, h, "s", 0, NAN, "next", {true, true}, false), std::invalid_argument);
    CHECK_THROWS_AS(t.get("s", 2), std::out_of_range);

    QTable z(1);
    q_update(z, h, "s", 0, 0.05, "", {}, true);
    CHECK(z.get("s", 0) == doctest::Approx(0.005));

    // fixed reward, no discount: geometric approach to r
    QTable g(1);
    const Hyper fast{.alpha = 0.5, .gamma = 0.0};
    for (int i = 0; i < 20; ++i) q_update(g, fast, "s", 0, 1.0, "s", {true}, false);
    CHECK(std::abs(g.get("s", 0) - 1.0) < 1e-3);
}

TEST_CASE("updating one category table leaves the others alone") {
    AgentBundle b = AgentBundle::for_registry(OperatorRegistry::defaults());
    b.low[0].set("k", 1, 0.5);
    b.low[2].set("k", 1, -0.5);
    const auto m = b.low[0], c = b.low[2];
    q_update(b.low[1], b.hyper, "k", 1, 1.0, "k", std::vector<bool>(18, true), false);
    CHECK(b.low[0] == m);
    CHECK(b.low[2] == c);
}

TEST_CASE("bundle JSON round trip and version check") {
    AgentBundle b = AgentBundle::for_registry(OperatorRegistry::defaults());
    b.high.set("d=O|p=S|q=1|l=0", 2, -0.25);
    b.low[1].set("g=O|s=2|m=0|v=1|r=3", 4, 0.125);
    b.epsilon = 0.3;
    b.task.kind = TaskKind::Forecast;
    const json j = bundle_to_json(b);
    CHECK(bundle_from_json(j) == b);
    CHECK(bundle_to_json(bundle_from_json(j)).dump() == j.dump());

    json bad = j;
    bad["version"] = 99;
    CHECK_THROWS_AS(bundle_from_json(bad), DataError);
}

TEST_CASE("binding: append-only registry growth widens, a changed id fails by name") {
    const auto small = OperatorRegistry::defaults().subset(
        {"impute.linear", "impute.mean", "outlier.hampel.w5", "repair.speed_clamp_min"});
    AgentBundle b = AgentBundle::for_registry(small);
    CHECK(b.low[0].actions() == 2);

    auto grown = small;
    grown.register_op({"impute.extra", IssueCategory::Missing, {}},
                      [](const TimeSeriesFrame& f, const OperatorContext&, const ParamMap&, std::vector<std::string>&) {
                          return f;
                      });
    AgentBundle g = b;
    g.bind(grown);
    CHECK(g.low[0].actions() == 3);
    CHECK(g.operator_ids[0].back() == "impute.extra");

    const auto other = OperatorRegistry::defaults().subset({"impute.mean", "outlier.hampel.w5", "repair.speed_clamp_min"});
    try {
        AgentBundle x = b;
        x.bind(other);
        FAIL("bind should have thrown");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("impute.linear") != std::string::npos);
    }
}
