#pragma once

#include "../analysis/check_trace.hpp"
#include "../analysis/oracle.hpp"
#include "../analysis/pie.hpp"
#include "../analysis/replay.hpp"
#include "../analysis/topology_checks.hpp"
#include "../engine.hpp"
#include "../trace_io.hpp"
#include "../version.hpp"
#include "config.hpp"

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace dissensus::cli {

enum ExitCode : int { kOk = 0, kInvariantViolation = 1, kConfigError = 2, kInternalError = 3 };

// Trace checks plus the shape and density checks that apply to the run's
// initial topology and rule set.
inline analysis::InvariantReport full_report(const Trace& t) {
    auto report = analysis::check_trace(t);
    std::vector<EpochSnapshot> epochs;
    try {
        epochs = analysis::replay(t);
    } catch (const Error&) {
        return report;  // the record-level checks already carry the failure
    }
    const auto& shape = epochs.front().shape;
    for (auto f : {analysis::ShapeFlag::Complete, analysis::ShapeFlag::Hole, analysis::ShapeFlag::Chain})
        if (analysis::has_flag(shape, f)) report.append(analysis::check_topology_invariance(t, f, &epochs));
    report.append(analysis::check_density_trend(t, std::nullopt, &epochs));
    return report;
}

inline std::string banner(const std::string& hash) {
    return std::string(kToolName) + " " + kToolVersion + " config=" + hash;
}

inline std::string summary_line(const Trace& t) {
    const auto& f = t.final_state;
    const auto g = Topology::from_edges(
        [&] {
            std::vector<AgentId> ids;
            for (const auto& [id, _] : f.x) ids.push_back(id);
            return ids;
        }(),
        f.edges);
    std::ostringstream os;
    os << to_string(t.termination);
    if (t.termination == Termination::Consensus || t.termination == Termination::SingleAgent)
        os << " at value " << f.x.begin()->second;
    if (t.period)
        os << " with period " << t.period->length_epochs << " epochs (" << t.period->length_ticks
           << " ticks) from epoch " << t.period->start_epoch;
    os << " after " << t.events.size() << (t.events.size() == 1 ? " event" : " events") << " (n=" << f.x.size()
       << ", shape=" << to_string(classify(g)) << ", ticks=" << f.tick << ")";
    return os.str();
}

struct RunOutputs {
    Trace trace;
    analysis::InvariantReport report;
    std::filesystem::path dir;
};

// Runs one configuration and writes the requested artifacts under dir.
inline RunOutputs write_run(const RunConfig& cfg, const EmitFlags& emit, const std::filesystem::path& dir) {
    RunOutputs out{run(cfg), {}, dir};
    out.report = full_report(out.trace);
    const auto hash = config_hash(cfg);
    std::filesystem::create_directories(dir);
    auto open = [&](const std::string& name) {
        std::ofstream os(dir / name, std::ios::binary);
        if (!os) throw Error("cannot write " + (dir / name).string());
        return os;
    };
    if (emit.trace) {
        auto os = open("trace.jsonl");
        write_trace(os, out.trace);
    }
    if (emit.snapshots) {
        auto os = open("snapshots.jsonl");
        write_snapshots(os, out.trace);
    }
    if (emit.frames || emit.svg) {
        const auto frames = analysis::export_pie_frames(out.trace, false);
        auto os = open("frames.csv");
        analysis::write_frames_csv(os, frames, banner(hash));
        if (emit.svg) {
            std::filesystem::create_directories(dir / "frames");
            for (const auto& fr : frames) {
                char name[32];
                std::snprintf(name, sizeof name, "frames/frame_%05zu.svg", fr.index);
                auto svg = open(name);
                svg << "<!-- " << banner(hash) << " -->\n" << analysis::frame_svg(fr);
            }
        }
    }
    if (emit.report) {
        auto os = open("report.txt");
        os << "# " << banner(hash) << '\n' << "# " << summary_line(out.trace) << '\n' << out.report.to_text();
    }
    return out;
}

inline int cmd_run(const ExperimentSpec& spec, std::ostream& out, std::ostream& err) {
    const auto cfg = spec.base();
    const auto result = write_run(cfg, spec.emit, spec.out_dir);
    out << summary_line(result.trace) << '\n';
    if (!result.report.passed()) {
        const auto* bad = result.report.first_failure();
        err << "invariant violated: " << bad->name << '\n';
        return kInvariantViolation;
    }
    return kOk;
}

inline int report_outcome(const analysis::InvariantReport& report, std::ostream& out, std::ostream& err) {
    out << report.to_text();
    if (const auto* bad = report.first_failure()) {
        err << "first failing invariant: " << bad->name << '\n';
        return kInvariantViolation;
    }
    out << "all checks passed\n";
    return kOk;
}

// Verifies a recorded trace: the record-level checks, then a fresh run from
// the recorded configuration that must reproduce the trace exactly. With a
// snapshot file, every recorded epoch is compared against the replay too.
inline int cmd_verify_trace(const std::filesystem::path& path, std::ostream& out, std::ostream& err,
                            const std::optional<std::filesystem::path>& snapshots = std::nullopt) {
    Trace t;
    for (const auto& file : {std::optional(path), snapshots}) {
        if (!file) continue;
        std::ifstream in(*file, std::ios::binary);
        if (!in) {
            err << "cannot open '" << file->string() << "'\n";
            return kConfigError;
        }
        try {
            if (*file == path) t = read_trace(in);
            else t.snapshots = read_snapshots(in);
        } catch (const ParseError& e) {
            err << file->string() << ": " << e.what() << '\n';
            return kConfigError;
        }
    }
    auto report = full_report(t);
    analysis::CheckBook book;
    const auto id = book.add("rerun-match");
    try {
        Trace fresh = run(t.config);
        fresh.snapshots = t.snapshots;
        book.expect(id, trace_to_string(fresh) == trace_to_string(t), std::nullopt, std::nullopt,
                    [] { return std::string("re-running the recorded configuration gives a different trace"); });
    } catch (const Error& e) {
        book.expect(id, false, std::nullopt, std::nullopt, [&] { return std::string(e.what()); });
    }
    report.append(std::move(book).finish());
    return report_outcome(report, out, err);
}

inline int cmd_verify_spec(const ExperimentSpec& spec, std::ostream& out, std::ostream& err) {
    analysis::InvariantReport all;
    const auto cells = spec.cells();
    for (const auto& cell : cells) {
        auto report = full_report(run(cell.config));
        for (auto& c : report.checks)
            if (cells.size() > 1) c.name = "cell" + std::to_string(cell.index) + "/" + c.name;
        all.append(report);
    }
    return report_outcome(all, out, err);
}

// Exhaustive check of every schedule. With max_agents set, every valid start
// on up to that many agents (with the config's B and chi) is explored instead
// of the config's own start.
inline int cmd_verify_oracle(const ExperimentSpec& spec, std::optional<std::size_t> max_agents,
                             analysis::OracleOptions opts, std::ostream& out, std::ostream& err) {
    const auto base = spec.base();
    const auto starts =
        max_agents ? analysis::enumerate_starts(base.B, base.chi(), *max_agents, base.rules) : std::vector{base};
    const auto r = analysis::exhaustive_oracle(starts, opts);
    out << "starts " << starts.size() << "\n"
        << "configurations " << r.configurations << "\n"
        << "transitions " << r.transitions << "\n"
        << "consensus configurations " << r.consensus.size() << " (" << r.consensus_before_duplication
        << " before a duplication, " << r.consensus_after_duplication << " after)\n";
    for (const auto& w : r.consensus)
        out << "  consensus " << w.configuration << (w.after_duplication ? " after" : " before")
            << " duplication\n";
    if (r.aborted) {
        err << "oracle aborted: " << r.abort_reason << '\n';
        return kInternalError;
    }
    for (const auto& v : r.violations) {
        out << "FAIL " << v.property << ": " << v.detail << "\n  path:";
        for (const auto& step : v.path) out << " " << step << ';';
        out << '\n';
    }
    if (!r.violations.empty()) {
        err << "first failing invariant: " << r.violations.front().property << '\n';
        return kInvariantViolation;
    }
    out << "all checks passed\n";
    return kOk;
}

struct SweepRow {
    std::string termination;
    std::int64_t epochs = 0;
    std::int64_t ticks = 0;
    std::optional<std::int64_t> first_duplication;
    std::size_t final_n = 0;
    std::size_t final_edges = 0;
    std::int64_t final_cycles = 0;
    double final_density = 0.0;
    std::string final_shape;
    std::optional<Quanta> consensus_value;
    std::string shape_invariant;
    std::string checks;
    std::string error;
    int code = kOk;
};

inline SweepRow sweep_cell(const Cell& cell) {
    SweepRow row;
    try {
        const auto t = run(cell.config);
        const auto report = full_report(t);
        const auto& f = t.final_state;
        std::vector<AgentId> ids;
        for (const auto& [id, _] : f.x) ids.push_back(id);
        const auto g = Topology::from_edges(ids, f.edges);
        row.termination = to_string(t.termination);
        row.epochs = f.epoch;
        row.ticks = f.tick;
        row.first_duplication = analysis::first_duplication_epoch(t);
        row.final_n = g.node_count();
        row.final_edges = g.edge_count();
        row.final_cycles = cycle_count(g);
        const double pairs = static_cast<double>(row.final_n) * static_cast<double>(row.final_n - 1) / 2.0;
        row.final_density = pairs > 0 ? static_cast<double>(row.final_edges) / pairs : 0.0;
        row.final_shape = to_string(classify(g));
        if (t.termination == Termination::Consensus || t.termination == Termination::SingleAgent)
            row.consensus_value = f.x.begin()->second;
        row.shape_invariant = "n/a";
        for (const auto& c : report.checks)
            if (c.name.rfind("shape-invariance:", 0) == 0 && c.status != analysis::CheckStatus::Skipped)
                row.shape_invariant = c.status == analysis::CheckStatus::Pass && row.shape_invariant != "no" ? "yes" : "no";
        const auto* bad = report.first_failure();
        row.checks = bad ? "FAIL:" + bad->name : "PASS";
        row.code = bad ? kInvariantViolation : kOk;
    } catch (const std::exception& e) {
        row.error = e.what();
        row.code = kInternalError;
    }
    return row;
}

inline std::string csv_field(std::string s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + '"';
}

// Runs every cell (concurrently when threads > 1) and writes one CSV row per
// cell in cell order. Returns the worst cell's exit code.
inline int cmd_sweep(const ExperimentSpec& spec, std::ostream& csv, std::ostream& err, unsigned threads = 0) {
    const auto cells = spec.cells();
    std::vector<SweepRow> rows(cells.size());
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, cells.size())));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) rows[i] = sweep_cell(cells[i]);
    };
    std::vector<std::thread> pool;
    for (unsigned k = 1; k < threads; ++k) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    csv << "# " << banner(spec.hash()) << " cells=" << cells.size() << '\n';
    csv << "cell,seed,B,rules,chi,n0,termination,epochs,ticks,first_duplication_epoch,final_n,final_edges,"
           "final_cycles,final_density,final_shape,consensus_value,lower_bound,shape_invariant,checks,error\n";
    int worst = kOk;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto& c = cells[i];
        const auto& r = rows[i];
        const Quanta chi = c.config.chi();
        char density[32];
        std::snprintf(density, sizeof density, "%.6f", r.final_density);
        csv << c.index << ',' << c.seed << ',' << c.B << ',' << ruleset_name(c.rules) << ',' << chi << ','
            << c.config.states.size() << ',' << r.termination << ',' << r.epochs << ',' << r.ticks << ','
            << (r.first_duplication ? std::to_string(*r.first_duplication) : "") << ',' << r.final_n << ','
            << r.final_edges << ',' << r.final_cycles << ',' << (r.error.empty() ? density : "") << ','
            << r.final_shape << ',' << (r.consensus_value ? std::to_string(*r.consensus_value) : "") << ','
            << (chi + c.B - 1) / c.B << ',' << r.shape_invariant << ',' << csv_field(r.checks) << ','
            << csv_field(r.error) << '\n';
        if (r.code != kOk) {
            err << "cell " << c.index << ": " << (r.error.empty() ? r.checks : r.error) << '\n';
            worst = std::max(worst, r.code);
        }
    }
    return worst;
}

}  // namespace dissensus::cli
