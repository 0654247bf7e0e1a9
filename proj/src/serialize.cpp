#include "tsclean/serialize.hpp"

#include <fstream>
#include <stdexcept>

namespace tsclean {

void to_json(json& j, const CellMask& m) {
    json cells = json::array();
    for (std::size_t t = 0; t < m.rows(); ++t)
        for (std::size_t d = 0; d < m.cols(); ++d)
            if (m.get(t, d)) cells.push_back({t, d});
    j = json{{"rows", m.rows()}, {"cols", m.cols()}, {"cells", cells}};
}

void from_json(const json& j, CellMask& m) {
    m = CellMask(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    for (const auto& c : j.at("cells")) {
        const auto t = c.at(0).get<std::size_t>();
        const auto d = c.at(1).get<std::size_t>();
        if (t >= m.rows() || d >= m.cols()) throw std::runtime_error("mask cell out of range");
        m.set(t, d);
    }
}

void to_json(json& j, const TimeSeriesFrame& f) {
    json rows = json::array();
    for (std::size_t t = 0; t < f.rows(); ++t) {
        json row = json::array();
        for (std::size_t d = 0; d < f.cols(); ++d) {
            if (f.missing(t, d))
                row.push_back(nullptr);
            else
                row.push_back(f.value(t, d));
        }
        rows.push_back(std::move(row));
    }
    j = json{{"names", f.names()}, {"origin", f.origin()}, {"step", f.step()}, {"values", rows}};
}

void from_json(const json& j, TimeSeriesFrame& f) {
    std::vector<std::vector<Cell>> rows;
    for (const auto& r : j.at("values")) {
        std::vector<Cell> row;
        for (const auto& c : r) row.push_back(c.is_null() ? Cell{} : Cell{c.get<double>()});
        rows.push_back(std::move(row));
    }
    f = TimeSeriesFrame(j.at("names").get<std::vector<std::string>>(), std::move(rows),
                        j.at("origin").get<std::int64_t>(), j.at("step").get<std::int64_t>());
}

void to_json(json& j, const QualityRates& r) {
    j = json{{"missing", r.missing}, {"outlier", r.outlier}, {"violation", r.violation}};
}

void from_json(const json& j, QualityRates& r) {
    r.missing = j.at("missing").get<double>();
    r.outlier = j.at("outlier").get<double>();
    r.violation = j.at("violation").get<double>();
}

void to_json(json& j, const TemporalConstraint& c) {
    j = json{{"kind", to_string(c.kind)}, {"variable", c.variable}, {"g_min", c.g_min}, {"g_max", c.g_max}};
    if (c.kind == TemporalKind::Variance) j["window"] = c.window;
}

void from_json(const json& j, TemporalConstraint& c) {
    c.kind = temporal_kind_from_string(j.at("kind").get<std::string>());
    c.variable = j.at("variable").get<std::size_t>();
    c.g_min = j.at("g_min").get<double>();
    c.g_max = j.at("g_max").get<double>();
    c.window = j.value("window", std::size_t{0});
}

void to_json(json& j, const PolyTerm& t) { j = json{{"degrees", t.degrees}, {"coef", t.coef}}; }

void from_json(const json& j, PolyTerm& t) {
    t.degrees = j.at("degrees").get<std::vector<int>>();
    t.coef = j.at("coef").get<double>();
}

void to_json(json& j, const CrossConstraint& c) {
    j = json{{"variables", c.variables}, {"target", c.target}, {"terms", c.terms},
             {"f_min", c.f_min},         {"f_max", c.f_max},   {"fit_r2", c.fit_r2}};
}

void from_json(const json& j, CrossConstraint& c) {
    c.variables = j.at("variables").get<std::vector<std::size_t>>();
    c.target = j.at("target").get<std::size_t>();
    c.terms = j.at("terms").get<std::vector<PolyTerm>>();
    c.f_min = j.at("f_min").get<double>();
    c.f_max = j.at("f_max").get<double>();
    c.fit_r2 = j.at("fit_r2").get<double>();
}

void to_json(json& j, const ConstraintSet& s) {
    j = json{{"schema", s.schema}, {"temporal", s.temporal}, {"cross", s.cross}};
}

void from_json(const json& j, ConstraintSet& s) {
    s.schema = j.at("schema").get<std::vector<std::string>>();
    s.temporal = j.at("temporal").get<std::vector<TemporalConstraint>>();
    s.cross = j.at("cross").get<std::vector<CrossConstraint>>();
}

json params_to_json(const ParamMap& p) {
    json j = json::object();
    for (const auto& [k, v] : p) {
        std::visit([&](const auto& x) { j[k] = x; }, v);
    }
    return j;
}

ParamMap params_from_json(const json& j) {
    ParamMap p;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto& v = it.value();
        if (v.is_boolean())
            p[it.key()] = v.get<bool>();
        else if (v.is_number_integer())
            p[it.key()] = v.get<std::int64_t>();
        else if (v.is_number())
            p[it.key()] = v.get<double>();
        else if (v.is_string())
            p[it.key()] = v.get<std::string>();
        else
            throw std::runtime_error("unsupported parameter value for '" + it.key() + "'");
    }
    return p;
}

void to_json(json& j, const OperatorDescriptor& o) {
    j = json{{"id", o.id}, {"category", std::string(1, category_letter(o.category))},
             {"params", params_to_json(o.params)}};
}

void from_json(const json& j, OperatorDescriptor& o) {
    o.id = j.at("id").get<std::string>();
    const auto cat = j.at("category").get<std::string>();
    if (cat.size() != 1) throw std::runtime_error("bad category '" + cat + "'");
    o.category = category_from_letter(cat[0]);
    o.params = params_from_json(j.value("params", json::object()));
}

void to_json(json& j, const RewardBreakdown& r) {
    j = json{{"structure", r.structure}, {"distance", r.distance}, {"local", r.local},
             {"lite", r.lite},           {"quality", r.quality},   {"cost", r.cost},
             {"penalty", r.penalty},     {"low_total", r.low_total}, {"high_total", r.high_total}};
}

void from_json(const json& j, RewardBreakdown& r) {
    r.structure = j.at("structure").get<double>();
    r.distance = j.at("distance").get<double>();
    r.local = j.at("local").get<double>();
    r.lite = j.at("lite").get<double>();
    r.quality = j.at("quality").get<double>();
    r.cost = j.at("cost").get<double>();
    r.penalty = j.at("penalty").get<double>();
    r.low_total = j.at("low_total").get<double>();
    r.high_total = j.at("high_total").get<double>();
}

void to_json(json& j, const PipelineStep& s) {
    j = json{{"id", s.op.id},
             {"category", std::string(1, category_letter(s.op.category))},
             {"params", params_to_json(s.op.params)},
             {"pre_rates", s.pre_rates},
             {"post_rates", s.post_rates},
             {"reward", s.reward},
             {"cells_changed", s.cells_changed}};
}

void from_json(const json& j, PipelineStep& s) {
    from_json(j, s.op);
    s.pre_rates = j.at("pre_rates").get<QualityRates>();
    s.post_rates = j.at("post_rates").get<QualityRates>();
    s.reward = j.at("reward").get<RewardBreakdown>();
    s.cells_changed = j.value("cells_changed", std::size_t{0});
}

namespace {
json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
std::optional<double> number_or_null(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}
}  // namespace

void to_json(json& j, const EvaluationReport& r) {
    j = json{{"f1", optional_number(r.f1)},
             {"nmse", optional_number(r.nmse)},
             {"rra", optional_number(r.rra)},
             {"perf_dirty", r.perf_dirty},
             {"perf_clean", r.perf_clean},
             {"delta_perf", r.delta_perf},
             {"task", to_string(r.task)}};
}

void from_json(const json& j, EvaluationReport& r) {
    r.f1 = number_or_null(j, "f1");
    r.nmse = number_or_null(j, "nmse");
    r.rra = number_or_null(j, "rra");
    r.perf_dirty = j.at("perf_dirty").get<double>();
    r.perf_clean = j.at("perf_clean").get<double>();
    r.delta_perf = j.at("delta_perf").get<double>();
    r.task = task_kind_from_string(j.at("task").get<std::string>());
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error("corrupt JSON in " + path + ": " + e.what());
    }
}

void write_json_file(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace tsclean
