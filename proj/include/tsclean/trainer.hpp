#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tsclean/agents.hpp"

namespace tsclean {

/// How the cost term is measured. WorkUnits counts the arithmetic of one lite
/// evaluation (deterministic); WallClock times it.
enum class CostMode { WorkUnits, WallClock };

struct TrainConfig {
    std::size_t episodes = 200;
    std::size_t l_max = 10;
    std::uint64_t seed = 0;
    RewardWeights weights;
    TaskSpec task;
    MinerConfig miner;
    DetectorConfig detectors;
    Hyper hyper;
    CostMode cost_mode = CostMode::WorkUnits;

    void validate() const;
};

void to_json(json& j, const TrainConfig& c);
void from_json(const json& j, TrainConfig& c);

/// The cleaning MDP around one dirty frame. Constraints are mined and
/// detectors chosen once, on the dirty frame, and then held fixed.
class Environment {
public:
    Environment(const TimeSeriesFrame& dirty, const OperatorRegistry& registry, const TaskSpec& task,
                const MinerConfig& miner, const DetectorConfig& detectors, const RewardWeights& weights,
                CostMode cost_mode = CostMode::WorkUnits);

    struct Step {
        ApplyResult applied;
        QualityAssessment post;
        double lite_post = 0.0;
        double structure_pre = 0.0;
        RewardBreakdown low;
        double cost = 0.0;
    };

    QualityAssessment assess(const TimeSeriesFrame& frame) const;
    double lite(const TimeSeriesFrame& frame) const { return evaluate(frame, task_, ModelTier::Lite); }
    /// Applies `op` with the masks of `qa`, then re-assesses and scores the low-level reward.
    Step step(const TimeSeriesFrame& current, const QualityAssessment& qa, double lite_pre,
              const OperatorDescriptor& op, IssueCategory target) const;
    /// Complex-tier performance gain of `cleaned` over the dirty frame.
    double sparse(const TimeSeriesFrame& cleaned) const;

    const TimeSeriesFrame& dirty() const { return dirty_; }
    const QualityAssessment& initial() const { return initial_; }
    double lite_dirty() const { return lite_dirty_; }
    const ConstraintSet& constraints() const { return constraints_; }
    const DetectorConfig& detectors() const { return detectors_; }
    const OperatorRegistry& registry() const { return *registry_; }
    const TaskSpec& task() const { return task_; }
    const RewardWeights& weights() const { return weights_; }

private:
    const OperatorRegistry* registry_;
    TaskSpec task_;
    RewardWeights weights_;
    CostMode cost_mode_;
    TimeSeriesFrame dirty_;
    ConstraintSet constraints_;
    DetectorConfig detectors_;
    QualityAssessment initial_;
    double lite_dirty_ = 0.0;
    double cost_scale_ = 1.0;
    mutable std::optional<double> complex_dirty_;
};

/// Arithmetic size of one lite evaluation of a frame of this shape.
double lite_work_units(std::size_t rows, std::size_t cols, const TaskSpec& task);

struct StepLog {
    char high = 'F';
    std::string op_id;  // empty for F
    std::size_t op_index = 0;
    QualityRates pre_rates;
    QualityRates post_rates;
    RewardBreakdown reward;
    std::size_t cells_changed = 0;
    bool improved = false;
    bool stagnation = false;
    std::size_t q_reads = 0;
    double q_before = 0.0;  // high-level Q(s, a) around this step's update (training only)
    double q_after = 0.0;
    std::vector<std::string> warnings;
};

struct EpisodeLog {
    std::size_t episode = 0;
    double epsilon = 0.0;
    std::vector<StepLog> steps;
    double sparse_reward = 0.0;
    bool finished = false;  // ended by F rather than by the step limit
};

struct TrainingLog {
    std::vector<EpisodeLog> episodes;
};

json to_json_value(const StepLog& s);
json to_json_value(const TrainingLog& log);
TrainingLog training_log_from_json(const json& j);

struct TrainResult {
    AgentBundle bundle;
    TrainingLog log;
};

TrainResult train(const TimeSeriesFrame& frame, const TrainConfig& config,
                  const OperatorRegistry& registry = OperatorRegistry::defaults());

/// Same as train() but on a prepared environment.
TrainResult train(const Environment& env, const TrainConfig& config);

struct InferResult {
    TimeSeriesFrame cleaned;
    CleaningPipeline pipeline;
    EpisodeLog log;
};

/// Greedy rollout, no exploration and no updates, stopped at the bundle's l_max.
InferResult infer(const Environment& env, const AgentBundle& bundle);
InferResult infer(const TimeSeriesFrame& frame, const AgentBundle& bundle,
                  const OperatorRegistry& registry = OperatorRegistry::defaults(),
                  const std::optional<TaskSpec>& task = std::nullopt);

/// Environment built from a bundle's stored configuration.
Environment environment_for(const TimeSeriesFrame& frame, const AgentBundle& bundle, const OperatorRegistry& registry,
                            const std::optional<TaskSpec>& task = std::nullopt);

inline constexpr int kPipelineVersion = 1;

json pipeline_to_json(const CleaningPipeline& p);
/// Throws DataError naming an operator id the registry does not know.
CleaningPipeline pipeline_from_json(const json& j, const OperatorRegistry& registry);
void save_pipeline(const CleaningPipeline& p, const std::string& path);
CleaningPipeline load_pipeline(const std::string& path, const OperatorRegistry& registry = OperatorRegistry::defaults());

/// Re-applies a pipeline to the environment's dirty frame, recomputing masks before each step.
TimeSeriesFrame replay(const Environment& env, const CleaningPipeline& pipeline);

}  // namespace tsclean
