#include "tsclean/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

#include "tsclean/bench.hpp"

namespace tsclean {

namespace {

struct Paths {
    std::string in, out, spec, ledger, constraints, config, log, agent, pipeline, dirty, cleaned, task, csv;
    std::string corpus, timestamps = "int";
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::optional<std::size_t> k;
    std::optional<double> threshold;
};

TimeSeriesFrame load_frame(const std::string& path, const std::string& ts_format, std::ostream& err) {
    CsvOptions opt;
    opt.timestamp_format = timestamp_format_from_string(ts_format);
    auto pre = preprocess(read_csv(path, opt));
    for (const auto& w : pre.warnings) err << "warning: " << w << "\n";
    if (pre.duplicates_removed > 0) err << "note: removed " << pre.duplicates_removed << " duplicate rows\n";
    return std::move(pre.frame);
}

void write_text(const std::string& text, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f || !(f << text)) throw DataError("cannot write '" + path + "'");
}

int cmd_synth(const Paths& p, std::ostream& out) {
    const auto c = make_synthetic(p.corpus, p.seed);
    write_csv(c.frame, p.out);
    if (!p.task.empty()) write_json_file(json(c.task), p.task);
    out << "wrote " << c.frame.rows() << " x " << c.frame.cols() << " frame to " << p.out << "\n";
    return kExitOk;
}

int cmd_inject(const Paths& p, std::ostream& out, std::ostream& err) {
    const auto clean = load_frame(p.in, p.timestamps, err);
    InjectionSpec spec = p.spec.empty() ? InjectionSpec{} : read_json_file(p.spec).get<InjectionSpec>();
    if (p.seed_given) spec.seed = p.seed;
    auto res = inject(clean, spec);
    write_csv(res.raw, p.out);
    write_json_file(json(res.ledger), p.ledger);
    out << "corrupted " << res.ledger.corrupted().popcount() << " of " << cell_count(clean) << " cells, "
        << res.ledger.duplicate_rows.size() << " duplicate rows\n";
    return kExitOk;
}

int cmd_mine(const Paths& p, std::ostream& out, std::ostream& err) {
    const auto frame = load_frame(p.in, p.timestamps, err);
    const MinerConfig cfg = p.config.empty() ? MinerConfig{} : read_json_file(p.config).get<MinerConfig>();
    const auto cs = mine_constraints(frame, cfg);
    write_json_file(json(cs), p.out);
    out << cs.temporal.size() << " temporal and " << cs.cross.size() << " cross constraints\n";
    return kExitOk;
}

int cmd_detect(const Paths& p, std::ostream& out, std::ostream& err) {
    const auto frame = load_frame(p.in, p.timestamps, err);
    const auto cs = read_json_file(p.constraints).get<ConstraintSet>();
    DetectorConfig dc;
    if (p.k) dc.k = *p.k;
    if (p.threshold) dc.threshold = *p.threshold;
    dc = resolve_detectors(frame, dc);
    const auto qa = assess(frame, cs, dc);
    json j{{"rates", qa.rates},
           {"detectors", dc},
           {"counts", {{"missing", qa.missing.popcount()}, {"outlier", qa.outlier.popcount()}, {"violation", qa.violation.popcount()}}}};
    write_json_file(j, p.out);
    out << "missing " << qa.rates.missing << ", outlier " << qa.rates.outlier << ", violation " << qa.rates.violation
        << "\n";
    return kExitOk;
}

int cmd_train(const Paths& p, std::ostream& out, std::ostream& err) {
    const auto frame = load_frame(p.in, p.timestamps, err);
    TrainConfig cfg = read_json_file(p.config).get<TrainConfig>();
    if (!p.task.empty()) cfg.task = read_json_file(p.task).get<TaskSpec>();
    if (p.seed_given) cfg.seed = p.seed;
    const auto res = train(frame, cfg);
    save_bundle(res.bundle, p.out);
    if (!p.log.empty()) write_json_file(to_json_value(res.log), p.log);
    out << "trained " << cfg.episodes << " episodes; final epsilon " << res.bundle.epsilon << "\n";
    return kExitOk;
}

int cmd_clean(const Paths& p, std::ostream& out, std::ostream& err) {
    const auto frame = load_frame(p.in, p.timestamps, err);
    const auto bundle = load_bundle(p.agent);
    std::optional<TaskSpec> task;
    if (!p.task.empty()) task = read_json_file(p.task).get<TaskSpec>();
    const auto res = infer(frame, bundle, OperatorRegistry::defaults(), task);
    write_csv(res.cleaned, p.out);
    if (!p.pipeline.empty()) save_pipeline(res.pipeline, p.pipeline);
    for (const auto& s : res.log.steps)
        for (const auto& w : s.warnings) err << "warning: " << s.op_id << ": " << w << "\n";
    out << "pipeline:";
    for (const auto& s : res.pipeline.steps) out << " " << s.op.id;
    out << "\n";
    return kExitOk;
}

int cmd_eval(const Paths& p, std::ostream& out, std::ostream& err) {
    const auto dirty = load_frame(p.dirty, p.timestamps, err);
    const auto cleaned = load_frame(p.cleaned, p.timestamps, err);
    const auto ledger = read_json_file(p.ledger).get<GroundTruthLedger>();
    const auto task = read_json_file(p.task).get<TaskSpec>();

    // flags are what the system itself raises on the dirty input
    const auto cs = mine_constraints(dirty, MinerConfig{});
    const auto qa = assess(dirty, cs, resolve_detectors(dirty, DetectorConfig{}));
    CellMask flags = qa.missing;
    flags |= qa.outlier;
    flags |= qa.violation;

    EvaluationReport r = upstream_metrics(dirty, cleaned, ledger, flags);
    r.task = task.kind;
    r.perf_dirty = evaluate(dirty, task, ModelTier::Complex);
    r.perf_clean = evaluate(cleaned, task, ModelTier::Complex);
    r.delta_perf = r.perf_clean - r.perf_dirty;
    write_json_file(json(r), p.out);

    if (!p.csv.empty()) {
        auto num = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
        std::string row = "task,f1,nmse,rra,perf_dirty,perf_clean,delta_perf\n";
        row += to_string(r.task) + "," + num(r.f1) + "," + num(r.nmse) + "," + num(r.rra) + "," +
               format_double(r.perf_dirty) + "," + format_double(r.perf_clean) + "," + format_double(r.delta_perf) + "\n";
        write_text(row, p.csv);
    }
    out << "delta_perf " << r.delta_perf;
    if (r.rra) out << ", rra " << *r.rra;
    else out << ", no-errors";
    out << "\n";
    return kExitOk;
}

int cmd_report(const Paths& p, std::ostream& out) {
    const auto log = training_log_from_json(read_json_file(p.log));
    out << std::left << std::setw(8) << "episode" << std::setw(9) << "epsilon" << std::setw(7) << "steps"
        << std::setw(11) << "low_sum" << std::setw(11) << "high_sum" << std::setw(10) << "penalty" << std::setw(10)
        << "sparse"
        << "pipeline\n";
    out << std::fixed;
    for (const auto& e : log.episodes) {
        double low = 0.0, high = 0.0;
        std::size_t penalties = 0, applied = 0;
        std::string pipe;
        for (const auto& s : e.steps) {
            if (s.high == 'F') {
                pipe += pipe.empty() ? "F" : " F";
                continue;
            }
            ++applied;
            low += s.reward.low_total;
            high += s.reward.high_total;
            penalties += s.stagnation;
            if (!pipe.empty()) pipe += " ";
            pipe += s.op_id;
        }
        out << std::setw(8) << e.episode << std::setw(9) << std::setprecision(3) << e.epsilon << std::setw(7) << applied
            << std::setw(11) << std::setprecision(4) << low << std::setw(11) << high << std::setw(10) << penalties
            << std::setw(10) << e.sparse_reward << pipe << "\n";
    }
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Hierarchical Q-learning cleaner for multivariate time series", "tsclean"};
    app.require_subcommand(1, 1);
    Paths p;

    auto add_ts = [&](CLI::App* c) {
        c->add_option("--timestamps", p.timestamps, "timestamp column format")->check(CLI::IsMember({"int", "iso8601"}));
    };

    auto* synth = app.add_subcommand("synth", "write a synthetic clean corpus");
    synth->add_option("--corpus", p.corpus, "forecast-sine-trend | classify-shapes | cluster-blobs")->required();
    synth->add_option("--seed", p.seed);
    synth->add_option("--out", p.out)->required();
    synth->add_option("--task", p.task, "where to write the matching task spec");

    auto* inj = app.add_subcommand("inject", "corrupt a clean CSV and record the ground truth");
    inj->add_option("--in", p.in)->required();
    inj->add_option("--spec", p.spec);
    inj->add_option("--seed", p.seed)->each([&](const std::string&) { p.seed_given = true; });
    inj->add_option("--out", p.out)->required();
    inj->add_option("--ledger", p.ledger)->required();
    add_ts(inj);

    auto* mine = app.add_subcommand("mine", "mine temporal and cross-variable constraints");
    mine->add_option("--in", p.in)->required();
    mine->add_option("--out", p.out)->required();
    mine->add_option("--config", p.config, "miner settings JSON");
    add_ts(mine);

    auto* detect = app.add_subcommand("detect", "quality rates of a CSV");
    detect->add_option("--in", p.in)->required();
    detect->add_option("--constraints", p.constraints)->required();
    detect->add_option("--out", p.out)->required();
    detect->add_option("--k", p.k, "number of detectors");
    detect->add_option("--threshold", p.threshold, "anomaly score threshold");
    add_ts(detect);

    auto* tr = app.add_subcommand("train", "train the agents on a dirty CSV");
    tr->add_option("--in", p.in)->required();
    tr->add_option("--config", p.config)->required();
    tr->add_option("--out", p.out)->required();
    tr->add_option("--log", p.log);
    tr->add_option("--task", p.task, "task spec overriding the config's");
    tr->add_option("--seed", p.seed)->each([&](const std::string&) { p.seed_given = true; });
    add_ts(tr);

    auto* cl = app.add_subcommand("clean", "clean a CSV with a trained agent");
    cl->add_option("--in", p.in)->required();
    cl->add_option("--agent", p.agent)->required();
    cl->add_option("--out", p.out)->required();
    cl->add_option("--pipeline", p.pipeline);
    cl->add_option("--task", p.task, "task spec overriding the agent's");
    add_ts(cl);

    auto* ev = app.add_subcommand("eval", "upstream and downstream metrics of a cleaning");
    ev->add_option("--dirty", p.dirty)->required();
    ev->add_option("--cleaned", p.cleaned)->required();
    ev->add_option("--ledger", p.ledger)->required();
    ev->add_option("--task", p.task)->required();
    ev->add_option("--out", p.out)->required();
    ev->add_option("--csv", p.csv, "also write a one-row CSV");
    add_ts(ev);

    auto* rep = app.add_subcommand("report", "print per-episode rewards of a training log");
    rep->add_option("--log", p.log)->required();

    std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    try {
        if (*synth) return cmd_synth(p, out);
        if (*inj) return cmd_inject(p, out, err);
        if (*mine) return cmd_mine(p, out, err);
        if (*detect) return cmd_detect(p, out, err);
        if (*tr) return cmd_train(p, out, err);
        if (*cl) return cmd_clean(p, out, err);
        if (*ev) return cmd_eval(p, out, err);
        if (*rep) return cmd_report(p, out);
    } catch (const DataError& e) {
        err << "data error: " << e.what();
        if (e.row()) err << " (row " << *e.row() << (e.col() ? ", column " + std::to_string(*e.col()) : "") << ")";
        err << "\n";
        return kExitData;
    } catch (const json::exception& e) {
        err << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::invalid_argument& e) {
        err << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::out_of_range& e) {
        err << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::runtime_error& e) {
        err << "data error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}

int run(int argc, const char* const* argv) {
    std::vector<std::string> args(argv, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace tsclean
