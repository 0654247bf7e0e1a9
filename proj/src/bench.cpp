#include "tsclean/bench.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "tsclean/stats.hpp"

namespace tsclean {

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
double normal(Rng& rng, double sd) { return sd > 0.0 ? std::normal_distribution<double>(0.0, sd)(rng) : 0.0; }
double sign(Rng& rng) { return std::bernoulli_distribution(0.5)(rng) ? 1.0 : -1.0; }

SyntheticCorpus forecast_corpus(Rng& rng) {
    const std::size_t T = 512;
    TimeSeriesFrame f({"x1", "x2", "x3", "x4"}, T);
    const double two_pi = 2.0 * std::numbers::pi;
    for (std::size_t t = 0; t < T; ++t) {
        const double td = static_cast<double>(t);
        const double x1 = 10.0 + 3.0 * std::sin(two_pi * td / 48.0) + 0.01 * td + normal(rng, 0.05);
        f.set(t, 0, x1);
        f.set(t, 1, 2.0 * x1 + 1.0 + normal(rng, 0.01));
        f.set(t, 2, 5.0 + 2.0 * std::sin(two_pi * td / 32.0 + 1.0) + normal(rng, 0.05));
        f.set(t, 3, 8.0 + 1.5 * std::cos(two_pi * td / 20.0) + normal(rng, 0.05));
    }
    TaskSpec task;
    task.kind = TaskKind::Forecast;
    return {std::move(f), task};
}

// One wave period of each shape, for phase u in [0, 1).
double shape(int group, double u) {
    u -= std::floor(u);
    switch (group) {
        case 0: return std::sin(2.0 * std::numbers::pi * u);
        case 1: return 2.0 * u - 1.0;
        default: return u < 0.5 ? 1.0 : -1.0;
    }
}

SyntheticCorpus classify_corpus(Rng& rng) {
    const std::size_t n = 120, L = 64;
    const double freq[3] = {1.0, 2.0, 4.0};
    TimeSeriesFrame f({"value"}, n * L);
    TaskSpec task;
    task.kind = TaskKind::Classify;
    task.series_length = L;
    for (std::size_t i = 0; i < n; ++i) {
        const int label = static_cast<int>(i % 3);
        task.labels.push_back(label);
        const double phase = uniform(rng, 0.0, 2.0 * std::numbers::pi), amp = uniform(rng, 0.8, 1.2);
        for (std::size_t t = 0; t < L; ++t) {
            const double x = 2.0 * std::numbers::pi * freq[label] * static_cast<double>(t) / static_cast<double>(L);
            f.set(i * L + t, 0, 5.0 + amp * std::sin(x + phase) + normal(rng, 0.1));
        }
    }
    return {std::move(f), task};
}

SyntheticCorpus cluster_corpus(Rng& rng) {
    const std::size_t n = 90, L = 64;
    TimeSeriesFrame f({"value"}, n * L);
    TaskSpec task;
    task.kind = TaskKind::Cluster;
    task.series_length = L;
    task.k = 3;
    for (std::size_t i = 0; i < n; ++i) {
        const int group = static_cast<int>(i % 3);
        const double phase = uniform(rng, 0.0, 1.0), amp = uniform(rng, 0.8, 1.2);
        for (std::size_t t = 0; t < L; ++t) {
            const double u = 2.0 * static_cast<double>(t) / static_cast<double>(L) + phase;
            f.set(i * L + t, 0, 5.0 + amp * shape(group, u) + normal(rng, 0.1));
        }
    }
    return {std::move(f), task};
}

}  // namespace

const std::vector<std::string>& synthetic_ids() {
    static const std::vector<std::string> ids{"forecast-sine-trend", "classify-shapes", "cluster-blobs"};
    return ids;
}

SyntheticCorpus make_synthetic(const std::string& id, std::uint64_t seed) {
    Rng rng(seed);
    SyntheticCorpus c;
    if (id == "forecast-sine-trend") c = forecast_corpus(rng);
    else if (id == "classify-shapes") c = classify_corpus(rng);
    else if (id == "cluster-blobs") c = cluster_corpus(rng);
    else throw std::invalid_argument("unknown corpus id '" + id + "'");
    c.task.seed = seed;
    return c;
}

void InjectionSpec::validate() const {
    for (double r : {duplicate_rate, missing_rate, point_outlier_rate, segment_outlier_rate, violation_rate})
        if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("injection rates must lie in [0, 1]");
    if (segment_min < 2 || segment_max < segment_min)
        throw std::invalid_argument("segment length range must satisfy 2 <= min <= max");
    if (!(noise_sigma >= 0.0)) throw std::invalid_argument("noise_sigma must be nonnegative");
    if (!(affected_fraction > 0.0 && affected_fraction <= 1.0))
        throw std::invalid_argument("affected_fraction must lie in (0, 1]");
}

void to_json(json& j, const InjectionSpec& s) {
    j = json{{"duplicate_rate", s.duplicate_rate},
             {"missing_rate", s.missing_rate},
             {"point_outlier_rate", s.point_outlier_rate},
             {"segment_outlier_rate", s.segment_outlier_rate},
             {"segment_min", s.segment_min},
             {"segment_max", s.segment_max},
             {"violation_rate", s.violation_rate},
             {"noise_sigma", s.noise_sigma},
             {"affected_fraction", s.affected_fraction},
             {"seed", s.seed}};
}

void from_json(const json& j, InjectionSpec& s) {
    const InjectionSpec d;
    s.duplicate_rate = j.value("duplicate_rate", d.duplicate_rate);
    s.missing_rate = j.value("missing_rate", d.missing_rate);
    s.point_outlier_rate = j.value("point_outlier_rate", d.point_outlier_rate);
    s.segment_outlier_rate = j.value("segment_outlier_rate", d.segment_outlier_rate);
    s.segment_min = j.value("segment_min", d.segment_min);
    s.segment_max = j.value("segment_max", d.segment_max);
    s.violation_rate = j.value("violation_rate", d.violation_rate);
    s.noise_sigma = j.value("noise_sigma", d.noise_sigma);
    s.affected_fraction = j.value("affected_fraction", d.affected_fraction);
    s.seed = j.value("seed", d.seed);
    s.validate();
}

CellMask GroundTruthLedger::corrupted() const {
    CellMask m = missing;
    m |= point_outlier;
    m |= segment_outlier;
    m |= violation;
    return m;
}

void to_json(json& j, const GroundTruthLedger& l) {
    j = json{{"clean", l.clean},
             {"missing", l.missing},
             {"point_outlier", l.point_outlier},
             {"segment_outlier", l.segment_outlier},
             {"violation", l.violation},
             {"duplicate_rows", l.duplicate_rows},
             {"noise_sigma", l.noise_sigma}};
}

void from_json(const json& j, GroundTruthLedger& l) {
    try {
        l.clean = j.at("clean").get<TimeSeriesFrame>();
        l.missing = j.at("missing").get<CellMask>();
        l.point_outlier = j.at("point_outlier").get<CellMask>();
        l.segment_outlier = j.at("segment_outlier").get<CellMask>();
        l.violation = j.at("violation").get<CellMask>();
        l.duplicate_rows = j.at("duplicate_rows").get<std::vector<std::size_t>>();
        l.noise_sigma = j.at("noise_sigma").get<double>();
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed ledger: ") + e.what());
    }
    for (const CellMask* m : {&l.missing, &l.point_outlier, &l.segment_outlier, &l.violation})
        if (m->rows() != l.clean.rows() || m->cols() != l.clean.cols())
            throw DataError("ledger mask shape differs from the clean frame");
}

InjectionResult inject(const TimeSeriesFrame& clean, const InjectionSpec& spec) {
    spec.validate();
    if (!validate_frame(clean).empty()) throw DataError("clean frame is not valid");
    const std::size_t T = clean.rows(), D = clean.cols(), N = T * D;
    const double rate_sum = spec.missing_rate + spec.point_outlier_rate + spec.segment_outlier_rate + spec.violation_rate;
    if (rate_sum > 0.9) throw DataError("over-corruption: cell rates sum to more than 0.9");

    Rng rng(spec.seed);
    auto count = [N](double r) { return static_cast<std::size_t>(std::llround(r * static_cast<double>(N))); };

    std::vector<double> sigma(D, 1.0);
    for (std::size_t d = 0; d < D; ++d) {
        const auto obs = stats::observed(clean.column(d));
        const double s = obs.size() > 1 ? stats::stddev(obs) : 0.0;
        if (s > 0.0) sigma[d] = s;
    }

    std::vector<std::size_t> affected(D);
    for (std::size_t d = 0; d < D; ++d) affected[d] = d;
    std::shuffle(affected.begin(), affected.end(), rng);
    const auto n_aff = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(spec.affected_fraction * static_cast<double>(D))));
    affected.resize(std::min(n_aff, D));
    std::sort(affected.begin(), affected.end());
    const std::size_t total = count(spec.missing_rate) + count(spec.point_outlier_rate) +
                              count(spec.segment_outlier_rate) + count(spec.violation_rate);
    if (total > T * affected.size()) throw DataError("over-corruption: not enough cells in the affected variables");

    InjectionResult res;
    auto& led = res.ledger;
    led.clean = clean;
    led.noise_sigma = spec.noise_sigma;
    led.missing = led.point_outlier = led.segment_outlier = led.violation = CellMask(T, D);
    TimeSeriesFrame dirty = clean;

    // noise first, over every cell
    if (spec.noise_sigma > 0.0)
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t d = 0; d < D; ++d) dirty.set(t, d, dirty.value(t, d) + normal(rng, spec.noise_sigma * sigma[d]));

    CellMask used(T, D), reserved(T, D);
    auto free_cell = [&](std::size_t t, std::size_t d) { return !used.get(t, d) && !reserved.get(t, d); };
    std::uniform_int_distribution<std::size_t> pick_var(0, affected.size() - 1);

    // segments
    {
        std::size_t remaining = count(spec.segment_outlier_rate), attempts = 0;
        while (remaining > 0) {
            if (++attempts > 100000) throw DataError("over-corruption: cannot place segment outliers");
            std::size_t len = std::uniform_int_distribution<std::size_t>(spec.segment_min, spec.segment_max)(rng);
            len = std::min({len, remaining, T});
            if (remaining - len == 1 && len + 1 <= T) ++len;  // never leave a single-cell remainder
            const std::size_t d = affected[pick_var(rng)];
            const std::size_t start = std::uniform_int_distribution<std::size_t>(0, T - len)(rng);
            bool ok = true;
            for (std::size_t t = start; t < start + len && ok; ++t) ok = free_cell(t, d);
            if (!ok) continue;
            const double offset = sign(rng) * uniform(rng, 3.0, 6.0) * sigma[d];
            for (std::size_t t = start; t < start + len; ++t) {
                dirty.set(t, d, dirty.value(t, d) + offset);
                used.set(t, d);
                led.segment_outlier.set(t, d);
            }
            remaining -= len;
        }
    }

    auto shuffled_cells = [&](std::size_t first_row) {
        std::vector<std::pair<std::size_t, std::size_t>> cells;
        for (auto d : affected)
            for (std::size_t t = first_row; t < T; ++t) cells.emplace_back(t, d);
        std::shuffle(cells.begin(), cells.end(), rng);
        return cells;
    };

    // violations: break the speed constraint mined on the clean frame; the
    // previous cell is frozen so the jump stays visible
    if (const std::size_t want = count(spec.violation_rate); want > 0) {
        const ConstraintSet cs = mine_constraints(clean, MinerConfig{});
        std::size_t placed = 0;
        for (auto [t, d] : shuffled_cells(1)) {
            if (placed == want) break;
            const TemporalConstraint* speed = cs.find(TemporalKind::Speed, d);
            if (!speed || !free_cell(t, d) || used.get(t - 1, d)) continue;
            double width = speed->g_max - speed->g_min;
            if (!(width > 0.0)) width = sigma[d];
            const double u = uniform(rng, 2.0, 4.0), prev = dirty.value(t - 1, d);
            dirty.set(t, d, sign(rng) > 0.0 ? prev + speed->g_max + u * width : prev + speed->g_min - u * width);
            used.set(t, d);
            reserved.set(t - 1, d);
            led.violation.set(t, d);
            ++placed;
        }
        if (placed < want) throw DataError("over-corruption: cannot place constraint violations");
    }

    // point outliers, then missing
    for (int pass = 0; pass < 2; ++pass) {
        const std::size_t want = count(pass == 0 ? spec.point_outlier_rate : spec.missing_rate);
        if (want == 0) continue;
        std::size_t placed = 0;
        for (auto [t, d] : shuffled_cells(0)) {
            if (placed == want) break;
            if (!free_cell(t, d)) continue;
            if (pass == 0) {
                dirty.set(t, d, dirty.value(t, d) + sign(rng) * uniform(rng, 5.0, 10.0) * sigma[d]);
                led.point_outlier.set(t, d);
            } else {
                dirty.set(t, d, std::nullopt);
                led.missing.set(t, d);
            }
            used.set(t, d);
            ++placed;
        }
        if (placed < want) throw DataError("over-corruption: not enough free cells");
    }

    // duplicate rows only exist in the raw output
    const auto n_dup = static_cast<std::size_t>(std::llround(spec.duplicate_rate * static_cast<double>(T)));
    std::vector<std::size_t> rows(T);
    for (std::size_t t = 0; t < T; ++t) rows[t] = t;
    std::shuffle(rows.begin(), rows.end(), rng);
    rows.resize(std::min(n_dup, T));
    std::sort(rows.begin(), rows.end());
    led.duplicate_rows = rows;

    res.raw.names = dirty.names();
    std::size_t next_dup = 0;
    for (std::size_t t = 0; t < T; ++t) {
        std::vector<Cell> row(D);
        for (std::size_t d = 0; d < D; ++d) row[d] = dirty.at(t, d);
        const int copies = next_dup < rows.size() && rows[next_dup] == t ? 2 : 1;
        if (copies == 2) ++next_dup;
        for (int c = 0; c < copies; ++c) {
            res.raw.timestamps.push_back(dirty.wall_time(t));
            res.raw.rows.push_back(row);
        }
    }
    res.dirty = std::move(dirty);
    return res;
}

EvaluationReport upstream_metrics(const TimeSeriesFrame& dirty, const TimeSeriesFrame& cleaned,
                                  const GroundTruthLedger& ledger, const CellMask& flags) {
    const auto& clean = ledger.clean;
    const std::size_t T = clean.rows(), D = clean.cols();
    for (const TimeSeriesFrame* f : {&dirty, &cleaned})
        if (f->rows() != T || f->cols() != D) throw DataError("frame shape differs from the ledger");
    if (flags.rows() != T || flags.cols() != D) throw DataError("flag mask shape differs from the ledger");

    EvaluationReport r;
    const CellMask truth = ledger.corrupted();
    if (truth.popcount() == 0) return r;  // "no-errors": nothing to score

    std::size_t tp = 0, fp = 0, fn = 0;
    double sq_err = 0.0, sq_ref = 0.0, abs_err = 0.0, abs_dirty = 0.0;
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t d = 0; d < D; ++d) {
            const bool actual = truth.get(t, d), predicted = flags.get(t, d);
            tp += actual && predicted;
            fp += !actual && predicted;
            fn += actual && !predicted;
            if (!actual) continue;
            const double x = clean.value(t, d);
            const double xh = cleaned.missing(t, d) ? 0.0 : cleaned.value(t, d);  // unrepaired gap counts as 0
            sq_err += (xh - x) * (xh - x);
            sq_ref += x * x;
            abs_err += std::abs(xh - x);
            abs_dirty += dirty.missing(t, d) ? std::abs(x) : std::abs(dirty.value(t, d) - x);
        }
    r.f1 = 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
    r.nmse = sq_err / std::max(sq_ref, 1e-12);
    if (abs_dirty > 1e-12) r.rra = std::clamp(1.0 - abs_err / abs_dirty, 0.0, 1.0);
    else r.rra = abs_err > 1e-12 ? 0.0 : 1.0;
    return r;
}

TimeSeriesFrame apply_sequence(const Environment& env, const std::vector<OperatorDescriptor>& ops) {
    CleaningPipeline p;
    for (const auto& op : ops) p.steps.push_back(PipelineStep{op, {}, {}, {}, 0});
    return replay(env, p);
}

SamplingResult sampling_baseline(const Environment& env, std::size_t l_max, std::uint64_t seed, std::size_t trials) {
    if (trials < 1) throw std::invalid_argument("trials must be at least 1");
    if (l_max < 1) throw std::invalid_argument("l_max must be at least 1");
    std::vector<OperatorDescriptor> pool;
    for (auto c : kAllCategories)
        for (const auto& d : env.registry().list(c)) pool.push_back(d);
    if (pool.empty()) throw std::invalid_argument("empty operator registry");

    Rng rng(seed);
    SamplingResult res;
    for (std::size_t i = 0; i < trials; ++i) {
        const std::size_t len = std::uniform_int_distribution<std::size_t>(1, l_max)(rng);
        std::vector<OperatorDescriptor> ops;
        for (std::size_t k = 0; k < len; ++k)
            ops.push_back(pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)]);
        TimeSeriesFrame cleaned = apply_sequence(env, ops);
        const double reward = env.sparse(cleaned);
        res.rewards.push_back(reward);
        if (i == 0 || reward > res.best_reward) {
            res.best_reward = reward;
            res.best = std::move(ops);
            res.cleaned = std::move(cleaned);
        }
    }
    return res;
}

}  // namespace tsclean
