#include "tsclean/agents.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tsclean {

char high_action_letter(HighAction a) {
    return a == HighAction::F ? 'F' : category_letter(to_category(a));
}

void QTable::widen(std::size_t actions) {
    if (actions <= actions_) return;
    actions_ = actions;
    for (auto& [key, row] : rows_) row.resize(actions_, 0.0);
}

double QTable::get(const std::string& key, std::size_t action) const {
    if (action >= actions_) throw std::out_of_range("action index out of range");
    auto it = rows_.find(key);
    if (it == rows_.end()) return 0.0;
    return it->second[action];
}

std::vector<double> QTable::row(const std::string& key) const {
    auto it = rows_.find(key);
    return it == rows_.end() ? std::vector<double>(actions_, 0.0) : it->second;
}

void QTable::set(const std::string& key, std::size_t action, double value) {
    if (action >= actions_) throw std::out_of_range("action index out of range");
    if (!std::isfinite(value)) throw std::invalid_argument("Q value must be finite");
    auto& r = rows_[key];
    r.resize(actions_, 0.0);
    r[action] = value;
}

void Hyper::validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1)");
    for (double e : {epsilon_start, epsilon_decay, epsilon_floor})
        if (!(e >= 0.0 && e <= 1.0)) throw std::invalid_argument("epsilon parameters must lie in [0, 1]");
}

AgentBundle AgentBundle::for_registry(const OperatorRegistry& registry) {
    AgentBundle b;
    for (auto c : kAllCategories) {
        const auto i = category_index(c);
        b.low[i] = QTable(registry.list(c).size());
        for (const auto& d : registry.list(c)) b.operator_ids[i].push_back(d.id);
    }
    return b;
}

void AgentBundle::bind(const OperatorRegistry& registry) {
    for (auto c : kAllCategories) {
        const auto i = category_index(c);
        const auto& current = registry.list(c);
        for (std::size_t k = 0; k < operator_ids[i].size(); ++k) {
            if (k >= current.size() || current[k].id != operator_ids[i][k])
                throw DataError("agent references operator '" + operator_ids[i][k] + "' (category " +
                                std::string(1, category_letter(c)) + ", position " + std::to_string(k) +
                                ") which the operator registry does not provide there");
        }
        for (std::size_t k = operator_ids[i].size(); k < current.size(); ++k) operator_ids[i].push_back(current[k].id);
        low[i].widen(current.size());
    }
}

void to_json(json& j, const MinerConfig& c) {
    j = json{{"k_sigma", c.k_sigma},
             {"variance_window", c.variance_window},
             {"corr_threshold", c.corr_threshold},
             {"r2_threshold", c.r2_threshold},
             {"residual_quantile", c.residual_quantile},
             {"coeff_prune_eps", c.coeff_prune_eps},
             {"mad_floor_frac", c.mad_floor_frac}};
}

void from_json(const json& j, MinerConfig& c) {
    const MinerConfig d;
    c.k_sigma = j.value("k_sigma", d.k_sigma);
    c.variance_window = j.value("variance_window", d.variance_window);
    c.corr_threshold = j.value("corr_threshold", d.corr_threshold);
    c.r2_threshold = j.value("r2_threshold", d.r2_threshold);
    c.residual_quantile = j.value("residual_quantile", d.residual_quantile);
    c.coeff_prune_eps = j.value("coeff_prune_eps", d.coeff_prune_eps);
    c.mad_floor_frac = j.value("mad_floor_frac", d.mad_floor_frac);
    c.validate();
}

void to_json(json& j, const DetectorConfig& c) {
    j = json{{"k", c.k}, {"threshold", c.threshold}};
    json names = json::array();
    for (const auto& d : c.detectors) names.push_back(d.name());
    j["detectors"] = names;
}

void from_json(const json& j, DetectorConfig& c) {
    c = DetectorConfig{};
    c.k = j.value("k", c.k);
    c.threshold = j.value("threshold", c.threshold);
    if (!(c.threshold > 0.0 && c.threshold < 1.0)) throw std::invalid_argument("detector threshold must lie in (0, 1)");
    if (c.k < 1) throw std::invalid_argument("detector k must be at least 1");
    if (j.contains("detectors"))
        for (const auto& n : j.at("detectors")) c.detectors.push_back(DetectorId::parse(n.get<std::string>()));
}

void to_json(json& j, const Hyper& h) {
    j = json{{"alpha", h.alpha},
             {"gamma", h.gamma},
             {"epsilon_start", h.epsilon_start},
             {"epsilon_decay", h.epsilon_decay},
             {"epsilon_floor", h.epsilon_floor}};
}

void from_json(const json& j, Hyper& h) {
    const Hyper d;
    h.alpha = j.value("alpha", d.alpha);
    h.gamma = j.value("gamma", d.gamma);
    h.epsilon_start = j.value("epsilon_start", d.epsilon_start);
    h.epsilon_decay = j.value("epsilon_decay", d.epsilon_decay);
    h.epsilon_floor = j.value("epsilon_floor", d.epsilon_floor);
    h.validate();
}

namespace {

json table_json(const QTable& t) {
    json rows = json::object();
    for (const auto& [key, row] : t.entries()) rows[key] = row;
    return json{{"actions", t.actions()}, {"rows", rows}};
}

QTable table_from(const json& j) {
    QTable t(j.at("actions").get<std::size_t>());
    for (const auto& [key, row] : j.at("rows").items()) {
        const auto values = row.get<std::vector<double>>();
        if (values.size() != t.actions()) throw DataError("Q-table row '" + key + "' has the wrong length");
        for (std::size_t a = 0; a < values.size(); ++a) t.set(key, a, values[a]);
    }
    return t;
}

}  // namespace

json bundle_to_json(const AgentBundle& b) {
    json j;
    j["version"] = kBundleVersion;
    j["hyper"] = b.hyper;
    j["epsilon"] = b.epsilon;
    j["high"] = table_json(b.high);
    json low = json::object(), ops = json::object();
    for (auto c : kAllCategories) {
        const std::string letter(1, category_letter(c));
        low[letter] = table_json(b.low[category_index(c)]);
        ops[letter] = b.operator_ids[category_index(c)];
    }
    j["low"] = low;
    j["operators"] = ops;
    j["task"] = b.task;
    j["weights"] = b.weights;
    j["miner"] = b.miner;
    j["detectors"] = b.detectors;
    j["l_max"] = b.l_max;
    return j;
}

AgentBundle bundle_from_json(const json& j) {
    try {
        const int version = j.at("version").get<int>();
        if (version != kBundleVersion)
            throw DataError("agent file version " + std::to_string(version) + " is not supported (expected " +
                            std::to_string(kBundleVersion) + ")");
        AgentBundle b;
        b.hyper = j.at("hyper").get<Hyper>();
        b.epsilon = j.at("epsilon").get<double>();
        b.high = table_from(j.at("high"));
        if (b.high.actions() != kHighActions) throw DataError("high-level table must have 4 actions");
        for (auto c : kAllCategories) {
            const std::string letter(1, category_letter(c));
            b.low[category_index(c)] = table_from(j.at("low").at(letter));
            b.operator_ids[category_index(c)] = j.at("operators").at(letter).get<std::vector<std::string>>();
            if (b.operator_ids[category_index(c)].size() != b.low[category_index(c)].actions())
                throw DataError("operator list and Q-table width disagree for category " + letter);
        }
        b.task = j.at("task").get<TaskSpec>();
        b.weights = j.at("weights").get<RewardWeights>();
        b.miner = j.at("miner").get<MinerConfig>();
        b.detectors = j.at("detectors").get<DetectorConfig>();
        b.l_max = j.at("l_max").get<std::size_t>();
        if (b.l_max < 1) throw DataError("l_max must be at least 1");
        return b;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed agent file: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("malformed agent file: ") + e.what());
    }
}

void save_bundle(const AgentBundle& b, const std::string& path) { write_json_file(bundle_to_json(b), path); }

AgentBundle load_bundle(const std::string& path) { return bundle_from_json(read_json_file(path)); }

HighMask high_mask(const QualityRates& rates, std::size_t step, std::optional<IssueCategory> blocked) {
    HighMask m;
    if (rates.missing > 0.0) {
        m.allowed = {true, false, false, false};
        m.forced_m = true;
        return m;
    }
    m.allowed = {false, true, true, step > 0};
    if (blocked && *blocked != IssueCategory::Missing) {
        auto copy = m.allowed;
        copy[category_index(*blocked)] = false;
        if (std::any_of(copy.begin(), copy.end(), [](bool b) { return b; })) m.allowed = copy;
    }
    return m;
}

HighAction select_high(const AgentBundle& b, const HighState& s, const HighMask& mask, bool explore,
                       std::mt19937_64& rng, ReadCounter* counter) {
    if (mask.forced_m) return HighAction::M;
    std::vector<std::size_t> allowed;
    for (std::size_t a = 0; a < kHighActions; ++a)
        if (mask.allowed[a]) allowed.push_back(a);
    if (allowed.empty()) throw std::logic_error("no high-level action allowed");
    if (explore && std::uniform_real_distribution<double>(0.0, 1.0)(rng) < b.epsilon)
        return static_cast<HighAction>(allowed[std::uniform_int_distribution<std::size_t>(0, allowed.size() - 1)(rng)]);
    const std::string key = s.key();
    std::size_t best = allowed.front();
    double best_q = -INFINITY;
    for (auto a : allowed) {
        const double q = b.high.get(key, a);
        if (counter) ++counter->reads;
        if (q > best_q) {
            best_q = q;
            best = a;
        }
    }
    return static_cast<HighAction>(best);
}

std::size_t select_low(const AgentBundle& b, const LowState& s, IssueCategory category, bool explore,
                       std::mt19937_64& rng, std::optional<std::size_t> blocked, ReadCounter* counter) {
    const QTable& table = b.low[category_index(category)];
    const std::size_t n = table.actions();
    if (n == 0) throw std::logic_error("empty operator category");
    std::vector<std::size_t> allowed;
    for (std::size_t a = 0; a < n; ++a)
        if (!(blocked && *blocked == a && n > 1)) allowed.push_back(a);
    if (explore && std::uniform_real_distribution<double>(0.0, 1.0)(rng) < b.epsilon)
        return allowed[std::uniform_int_distribution<std::size_t>(0, allowed.size() - 1)(rng)];
    const std::string key = s.key();
    std::size_t best = allowed.front();
    double best_q = -INFINITY;
    for (auto a : allowed) {
        const double q = table.get(key, a);
        if (counter) ++counter->reads;
        if (q > best_q) {
            best_q = q;
            best = a;
        }
    }
    return best;
}

void q_update(QTable& table, const Hyper& hyper, const std::string& key, std::size_t action, double reward,
              const std::string& next_key, const std::vector<bool>& next_allowed, bool terminal) {
    if (!std::isfinite(reward)) throw std::invalid_argument("reward must be finite");
    double bootstrap = 0.0;
    if (!terminal) {
        double m = -INFINITY;
        for (std::size_t a = 0; a < table.actions(); ++a)
            if (a < next_allowed.size() && next_allowed[a]) m = std::max(m, table.get(next_key, a));
        bootstrap = std::isfinite(m) ? m : 0.0;
    }
    const double q = table.get(key, action);
    table.set(key, action, q + hyper.alpha * (reward + hyper.gamma * bootstrap - q));
}

}  // namespace tsclean
