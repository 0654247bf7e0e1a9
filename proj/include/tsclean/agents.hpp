#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tsclean/anomaly.hpp"
#include "tsclean/constraints.hpp"
#include "tsclean/downstream.hpp"
#include "tsclean/operators.hpp"
#include "tsclean/quality.hpp"
#include "tsclean/rewards.hpp"

namespace tsclean {

/// High-level actions: the three issue categories plus F (finish).
enum class HighAction { M = 0, O = 1, C = 2, F = 3 };
inline constexpr std::size_t kHighActions = 4;

char high_action_letter(HighAction a);
inline IssueCategory to_category(HighAction a) { return static_cast<IssueCategory>(static_cast<int>(a)); }
inline HighAction to_high_action(IssueCategory c) { return static_cast<HighAction>(static_cast<int>(c)); }

/// Sparse state -> action-value table; unseen states read as all zeros.
class QTable {
public:
    QTable() = default;
    explicit QTable(std::size_t actions) : actions_(actions) {}

    std::size_t actions() const { return actions_; }
    /// Widens every row (new actions start at 0); never shrinks.
    void widen(std::size_t actions);
    double get(const std::string& key, std::size_t action) const;
    std::vector<double> row(const std::string& key) const;
    void set(const std::string& key, std::size_t action, double value);
    const std::map<std::string, std::vector<double>>& entries() const { return rows_; }

    bool operator==(const QTable&) const = default;

private:
    std::size_t actions_ = 0;
    std::map<std::string, std::vector<double>> rows_;
};

struct Hyper {
    double alpha = 0.1;
    double gamma = 0.9;
    double epsilon_start = 1.0;
    double epsilon_decay = 0.995;
    double epsilon_floor = 0.05;

    void validate() const;
    bool operator==(const Hyper&) const = default;
};

inline constexpr int kBundleVersion = 1;

/// Everything `clean` needs to replay a trained policy on new data.
struct AgentBundle {
    Hyper hyper;
    double epsilon = 1.0;
    QTable high{kHighActions};
    std::array<QTable, 3> low;
    std::array<std::vector<std::string>, 3> operator_ids;  // per category, registry order at save time

    TaskSpec task;
    RewardWeights weights;
    MinerConfig miner;
    DetectorConfig detectors;  // k and threshold; the detector list is re-selected per frame
    std::size_t l_max = 10;

    /// Empty tables sized for the registry's categories.
    static AgentBundle for_registry(const OperatorRegistry& registry);
    /// Checks stored operator ids against the registry (append-only contract)
    /// and widens the low tables to the registry sizes. Throws DataError naming
    /// the first mismatching id.
    void bind(const OperatorRegistry& registry);

    bool operator==(const AgentBundle&) const = default;
};

json bundle_to_json(const AgentBundle& b);
AgentBundle bundle_from_json(const json& j);
void save_bundle(const AgentBundle& b, const std::string& path);
AgentBundle load_bundle(const std::string& path);

void to_json(json& j, const MinerConfig& c);
void from_json(const json& j, MinerConfig& c);
void to_json(json& j, const DetectorConfig& c);
void from_json(const json& j, DetectorConfig& c);
void to_json(json& j, const Hyper& h);
void from_json(const json& j, Hyper& h);

/// Counts Q-value reads made while choosing actions.
struct ReadCounter {
    std::size_t reads = 0;
};

struct HighMask {
    std::array<bool, kHighActions> allowed{true, true, true, true};
    bool forced_m = false;  // missing-first bypass: no table read
};

/// Action mask for the high level: the missing-first rule forces M while anything is
/// Missing; otherwise M is masked, F is masked at step 0, and `blocked`
/// (a category just penalised for stagnation) is masked when possible.
HighMask high_mask(const QualityRates& rates, std::size_t step, std::optional<IssueCategory> blocked);

HighAction select_high(const AgentBundle& b, const HighState& s, const HighMask& mask, bool explore,
                       std::mt19937_64& rng, ReadCounter* counter = nullptr);

/// epsilon-greedy within one category's table; `blocked` excludes one index when
/// the category has more than one operator. Greedy ties go to the lowest index.
std::size_t select_low(const AgentBundle& b, const LowState& s, IssueCategory category, bool explore,
                       std::mt19937_64& rng, std::optional<std::size_t> blocked = std::nullopt,
                       ReadCounter* counter = nullptr);

/// One-step Q-learning. `next_allowed` masks the bootstrap max (ignored when terminal).
void q_update(QTable& table, const Hyper& hyper, const std::string& key, std::size_t action, double reward,
              const std::string& next_key, const std::vector<bool>& next_allowed, bool terminal);

}  // namespace tsclean
