#include "tsclean/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace tsclean {

void TrainConfig::validate() const {
    if (episodes < 1) throw std::invalid_argument("episodes must be at least 1");
    if (l_max < 1) throw std::invalid_argument("l_max must be at least 1");
    weights.validate();
    miner.validate();
    hyper.validate();
    if (!(detectors.threshold > 0.0 && detectors.threshold < 1.0))
        throw std::invalid_argument("detector threshold must lie in (0, 1)");
}

void to_json(json& j, const TrainConfig& c) {
    j = json{{"episodes", c.episodes}, {"l_max", c.l_max},   {"seed", c.seed},       {"weights", c.weights},
             {"task", c.task},         {"miner", c.miner},   {"detectors", c.detectors}, {"hyper", c.hyper},
             {"cost_mode", c.cost_mode == CostMode::WallClock ? "wall_clock" : "work_units"}};
}

void from_json(const json& j, TrainConfig& c) {
    c = TrainConfig{};
    c.episodes = j.value("episodes", c.episodes);
    c.l_max = j.value("l_max", c.l_max);
    c.seed = j.value("seed", c.seed);
    if (j.contains("weights")) c.weights = j.at("weights").get<RewardWeights>();
    if (j.contains("task")) c.task = j.at("task").get<TaskSpec>();
    if (j.contains("miner")) c.miner = j.at("miner").get<MinerConfig>();
    if (j.contains("detectors")) c.detectors = j.at("detectors").get<DetectorConfig>();
    if (j.contains("hyper")) c.hyper = j.at("hyper").get<Hyper>();
    const std::string mode = j.value("cost_mode", std::string("work_units"));
    if (mode == "wall_clock") c.cost_mode = CostMode::WallClock;
    else if (mode == "work_units") c.cost_mode = CostMode::WorkUnits;
    else throw std::invalid_argument("cost_mode must be work_units or wall_clock");
    c.validate();
}

double lite_work_units(std::size_t rows, std::size_t cols, const TaskSpec& task) {
    const double T = static_cast<double>(rows), D = static_cast<double>(cols);
    switch (task.kind) {
        case TaskKind::Forecast: return D * T * 81.0;  // normal equations of an order-8 AR fit per variable
        case TaskKind::Classify: {
            const double n = static_cast<double>(task.sample_count(rows));
            return n * n * task.test_frac * (1.0 - task.test_frac) * 16.0 * D;
        }
        case TaskKind::Cluster: {
            const double n = static_cast<double>(task.sample_count(rows));
            return n * static_cast<double>(task.k) * 8.0 * D + n * static_cast<double>(task.series_length) * D;
        }
    }
    return 1.0;
}

Environment::Environment(const TimeSeriesFrame& dirty, const OperatorRegistry& registry, const TaskSpec& task,
                         const MinerConfig& miner, const DetectorConfig& detectors, const RewardWeights& weights,
                         CostMode cost_mode)
    : registry_(&registry), task_(task), weights_(weights), cost_mode_(cost_mode), dirty_(dirty) {
    task_.validate(dirty.rows());
    weights_.validate();
    constraints_ = mine_constraints(dirty, miner);
    detectors_ = resolve_detectors(dirty, detectors);
    initial_ = assess(dirty);
    if (cost_mode_ == CostMode::WallClock) {
        std::vector<double> secs;
        for (int i = 0; i < 5; ++i) {
            const auto t0 = std::chrono::steady_clock::now();
            lite_dirty_ = lite(dirty);
            secs.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        }
        std::sort(secs.begin(), secs.end());
        cost_scale_ = std::max(secs[2], 1e-9);
    } else {
        lite_dirty_ = lite(dirty);
        cost_scale_ = lite_work_units(dirty.rows(), dirty.cols(), task_);
    }
}

QualityAssessment Environment::assess(const TimeSeriesFrame& frame) const {
    return tsclean::assess(frame, constraints_, detectors_);
}

Environment::Step Environment::step(const TimeSeriesFrame& current, const QualityAssessment& qa, double lite_pre,
                                    const OperatorDescriptor& op, IssueCategory target) const {
    Step s;
    const OperatorContext ctx{&constraints_, qa.outlier, qa.violation};
    s.applied = registry_->apply(op, current, ctx);
    double secs = 0.0;
    if (s.applied.cells_changed == 0) {
        // identical frame: assessment and lite score cannot change
        s.post = qa;
        s.lite_post = lite_pre;
    } else {
        s.post = assess(s.applied.frame);
        const auto t0 = std::chrono::steady_clock::now();
        s.lite_post = lite(s.applied.frame);
        secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    s.structure_pre = structure_score(current);
    s.low = low_dense(current, s.applied.frame, qa.rates, s.post.rates, target, s.lite_post - lite_pre, weights_);
    s.cost = cost_mode_ == CostMode::WallClock
                 ? secs / cost_scale_
                 : lite_work_units(s.applied.frame.rows(), s.applied.frame.cols(), task_) / cost_scale_;
    return s;
}

double Environment::sparse(const TimeSeriesFrame& cleaned) const {
    if (!complex_dirty_) complex_dirty_ = evaluate(dirty_, task_, ModelTier::Complex);
    return evaluate(cleaned, task_, ModelTier::Complex) - *complex_dirty_;
}

namespace {

struct Rollout {
    TimeSeriesFrame frame;
    CleaningPipeline pipeline;
    EpisodeLog log;
};

std::vector<bool> mask_vector(const HighMask& m) {
    if (m.forced_m) return {true, false, false, false};
    return std::vector<bool>(m.allowed.begin(), m.allowed.end());
}

Rollout rollout(const Environment& env, AgentBundle& b, std::mt19937_64& rng, bool explore, bool learn) {
    const std::size_t l_max = b.l_max;
    const auto& w = env.weights();
    Rollout r;
    r.frame = env.dirty();
    QualityAssessment qa = env.initial();
    double p_lite = env.lite_dirty();
    std::optional<IssueCategory> a_prev;
    std::deque<ActionRecord> history;
    std::optional<IssueCategory> high_block;
    std::optional<std::pair<IssueCategory, std::size_t>> low_block;
    std::optional<std::pair<std::string, std::size_t>> last;

    for (std::size_t l = 0; l < l_max; ++l) {
        StepLog sl;
        ReadCounter reads;
        const HighState sH = high_state(qa.rates, a_prev, p_lite, l, l_max);
        const HighMask mask = high_mask(qa.rates, l, high_block);
        const HighAction aH = select_high(b, sH, mask, explore, rng, &reads);
        sl.pre_rates = qa.rates;
        sl.post_rates = qa.rates;
        if (aH == HighAction::F) {
            sl.high = 'F';
            sl.q_reads = reads.reads;
            r.log.steps.push_back(sl);
            r.log.finished = true;
            last = {sH.key(), static_cast<std::size_t>(HighAction::F)};
            break;
        }
        const IssueCategory cat = to_category(aH);
        const auto& ops = env.registry().list(cat);
        const LowState sL = low_state(r.frame, cat);
        std::optional<std::size_t> lb;
        if (low_block && low_block->first == cat) lb = low_block->second;
        const std::size_t aL = select_low(b, sL, cat, explore, rng, lb, &reads);
        const auto& op = ops[aL];

        auto st = env.step(r.frame, qa, p_lite, op, cat);
        const bool improved = improvement(st.low, st.structure_pre, w) > w.improvement_threshold;
        history.push_back({static_cast<int>(category_index(cat)), static_cast<int>(aL), improved});
        const bool stagnation = stagnation_check(history);
        const RewardBreakdown full = high_dense(st.low, qa.rates, st.post.rates, st.cost, stagnation, w);

        // deadlock break: the repeated pair is unavailable at the next step
        high_block.reset();
        low_block.reset();
        if (stagnation) {
            if (ops.size() > 1) low_block = std::make_pair(cat, aL);
            else high_block = cat;
        }

        sl.high = category_letter(cat);
        sl.op_id = op.id;
        sl.op_index = aL;
        sl.post_rates = st.post.rates;
        sl.reward = full;
        sl.cells_changed = st.applied.cells_changed;
        sl.improved = improved;
        sl.stagnation = stagnation;
        sl.q_reads = reads.reads;
        sl.warnings = st.applied.warnings;

        if (learn) {
            const bool terminal = l + 1 == l_max;
            const LowState sL2 = low_state(st.applied.frame, cat);
            q_update(b.low[category_index(cat)], b.hyper, sL.key(), aL, full.low_total, sL2.key(),
                     std::vector<bool>(ops.size(), true), terminal);
            const HighState sH2 = high_state(st.post.rates, cat, st.lite_post, l + 1, l_max);
            const HighMask m2 = high_mask(st.post.rates, l + 1, high_block);
            sl.q_before = b.high.get(sH.key(), static_cast<std::size_t>(aH));
            q_update(b.high, b.hyper, sH.key(), static_cast<std::size_t>(aH), full.high_total, sH2.key(),
                     mask_vector(m2), terminal);
            sl.q_after = b.high.get(sH.key(), static_cast<std::size_t>(aH));
        }

        r.pipeline.steps.push_back({op, qa.rates, st.post.rates, full, st.applied.cells_changed});
        r.log.steps.push_back(std::move(sl));
        r.frame = std::move(st.applied.frame);
        qa = std::move(st.post);
        p_lite = st.lite_post;
        a_prev = cat;
        last = {sH.key(), static_cast<std::size_t>(aH)};
    }

    r.log.sparse_reward = env.sparse(r.frame);
    if (learn && last) q_update(b.high, b.hyper, last->first, last->second, r.log.sparse_reward, "", {}, true);
    return r;
}

}  // namespace

TrainResult train(const Environment& env, const TrainConfig& config) {
    config.validate();
    TrainResult res;
    res.bundle = AgentBundle::for_registry(env.registry());
    res.bundle.hyper = config.hyper;
    res.bundle.epsilon = config.hyper.epsilon_start;
    res.bundle.task = env.task();
    res.bundle.weights = config.weights;
    res.bundle.miner = config.miner;
    res.bundle.detectors = DetectorConfig{.k = config.detectors.k, .threshold = config.detectors.threshold,
                                          .detectors = config.detectors.detectors};
    res.bundle.l_max = config.l_max;

    std::mt19937_64 rng(config.seed);
    for (std::size_t e = 0; e < config.episodes; ++e) {
        auto r = rollout(env, res.bundle, rng, true, true);
        r.log.episode = e;
        r.log.epsilon = res.bundle.epsilon;
        res.log.episodes.push_back(std::move(r.log));
        res.bundle.epsilon = std::max(config.hyper.epsilon_floor, res.bundle.epsilon * config.hyper.epsilon_decay);
    }
    return res;
}

TrainResult train(const TimeSeriesFrame& frame, const TrainConfig& config, const OperatorRegistry& registry) {
    config.validate();
    const Environment env(frame, registry, config.task, config.miner, config.detectors, config.weights,
                          config.cost_mode);
    return train(env, config);
}

Environment environment_for(const TimeSeriesFrame& frame, const AgentBundle& bundle, const OperatorRegistry& registry,
                            const std::optional<TaskSpec>& task) {
    return Environment(frame, registry, task ? *task : bundle.task, bundle.miner, bundle.detectors, bundle.weights);
}

InferResult infer(const Environment& env, const AgentBundle& bundle) {
    AgentBundle b = bundle;
    b.bind(env.registry());
    std::mt19937_64 rng(0);  // unused: exploration is off
    auto r = rollout(env, b, rng, false, false);
    return {std::move(r.frame), std::move(r.pipeline), std::move(r.log)};
}

InferResult infer(const TimeSeriesFrame& frame, const AgentBundle& bundle, const OperatorRegistry& registry,
                  const std::optional<TaskSpec>& task) {
    AgentBundle b = bundle;
    b.bind(registry);
    return infer(environment_for(frame, b, registry, task), b);
}

json to_json_value(const StepLog& s) {
    json warnings = s.warnings;
    return json{{"high", std::string(1, s.high)},
                {"op", s.op_id},
                {"op_index", s.op_index},
                {"pre_rates", s.pre_rates},
                {"post_rates", s.post_rates},
                {"reward", s.reward},
                {"cells_changed", s.cells_changed},
                {"improved", s.improved},
                {"stagnation", s.stagnation},
                {"q_reads", s.q_reads},
                {"q_before", s.q_before},
                {"q_after", s.q_after},
                {"warnings", warnings}};
}

json to_json_value(const TrainingLog& log) {
    json eps = json::array();
    for (const auto& e : log.episodes) {
        json steps = json::array();
        for (const auto& s : e.steps) steps.push_back(to_json_value(s));
        eps.push_back(json{{"episode", e.episode},
                           {"epsilon", e.epsilon},
                           {"finished", e.finished},
                           {"sparse_reward", e.sparse_reward},
                           {"steps", steps}});
    }
    return json{{"version", 1}, {"episodes", eps}};
}

TrainingLog training_log_from_json(const json& j) {
    try {
        TrainingLog log;
        for (const auto& e : j.at("episodes")) {
            EpisodeLog el;
            el.episode = e.at("episode").get<std::size_t>();
            el.epsilon = e.at("epsilon").get<double>();
            el.finished = e.at("finished").get<bool>();
            el.sparse_reward = e.at("sparse_reward").get<double>();
            for (const auto& s : e.at("steps")) {
                StepLog sl;
                sl.high = s.at("high").get<std::string>().at(0);
                sl.op_id = s.at("op").get<std::string>();
                sl.op_index = s.at("op_index").get<std::size_t>();
                sl.pre_rates = s.at("pre_rates").get<QualityRates>();
                sl.post_rates = s.at("post_rates").get<QualityRates>();
                sl.reward = s.at("reward").get<RewardBreakdown>();
                sl.cells_changed = s.at("cells_changed").get<std::size_t>();
                sl.improved = s.at("improved").get<bool>();
                sl.stagnation = s.at("stagnation").get<bool>();
                sl.q_reads = s.at("q_reads").get<std::size_t>();
                sl.q_before = s.at("q_before").get<double>();
                sl.q_after = s.at("q_after").get<double>();
                sl.warnings = s.at("warnings").get<std::vector<std::string>>();
                el.steps.push_back(std::move(sl));
            }
            log.episodes.push_back(std::move(el));
        }
        return log;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed training log: ") + e.what());
    }
}

json pipeline_to_json(const CleaningPipeline& p) {
    json steps = json::array();
    for (const auto& s : p.steps) steps.push_back(s);
    return json{{"version", kPipelineVersion}, {"steps", steps}};
}

CleaningPipeline pipeline_from_json(const json& j, const OperatorRegistry& registry) {
    CleaningPipeline p;
    try {
        if (j.at("version").get<int>() != kPipelineVersion) throw DataError("unsupported pipeline version");
        for (const auto& s : j.at("steps")) {
            const auto id = s.at("id").get<std::string>();
            if (!registry.contains(id)) throw DataError("pipeline references unknown operator id '" + id + "'");
            auto step = s.get<PipelineStep>();
            if (step.op.category != registry.descriptor(id).category)
                throw DataError("operator '" + id + "' is registered under a different category");
            p.steps.push_back(std::move(step));
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed pipeline: ") + e.what());
    }
    return p;
}

void save_pipeline(const CleaningPipeline& p, const std::string& path) { write_json_file(pipeline_to_json(p), path); }

CleaningPipeline load_pipeline(const std::string& path, const OperatorRegistry& registry) {
    return pipeline_from_json(read_json_file(path), registry);
}

TimeSeriesFrame replay(const Environment& env, const CleaningPipeline& pipeline) {
    TimeSeriesFrame frame = env.dirty();
    QualityAssessment qa = env.initial();
    for (const auto& s : pipeline.steps) {
        const OperatorContext ctx{&env.constraints(), qa.outlier, qa.violation};
        auto applied = env.registry().apply(s.op, frame, ctx);
        if (applied.cells_changed == 0) continue;
        frame = std::move(applied.frame);
        qa = env.assess(frame);
    }
    return frame;
}

}  // namespace tsclean
