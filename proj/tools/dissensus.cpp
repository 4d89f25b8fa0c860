#include "dissensus/cli/commands.hpp"
#include "dissensus/cli/config.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace dissensus;
using namespace dissensus::cli;

namespace {

struct Options {
    std::string config;
    std::string trace;
    std::string snapshots;
    std::string out;
    std::string emit;
    std::string script;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> max_ticks;
    std::optional<std::int64_t> max_epochs;
    bool oracle = false;
    std::optional<std::size_t> oracle_agents;
    std::int64_t horizon = 0;
    unsigned threads = 0;
};

ExperimentSpec load(const Options& o) {
    auto spec = parse_config(o.config);
    if (!o.out.empty()) spec.out_dir = o.out;
    if (!o.emit.empty()) spec.emit = parse_emit(o.emit);
    bool changed = false;
    if (o.seed) spec.seed = *o.seed, changed = true;
    if (o.max_ticks) spec.max_ticks = *o.max_ticks, changed = true;
    if (o.max_epochs) spec.max_epochs = *o.max_epochs, changed = true;
    if (!o.script.empty()) {
        spec.script = cli::detail::read_script(o.script);
        if (spec.script.empty()) throw ConfigError("--script: file has no edges");
        spec.scheduler = SchedulerKind::Scripted;
        changed = true;
    }
    if (changed) {
        std::ostringstream canon;
        canon << spec.canonical << "override seed=" << spec.seed << " max_ticks=" << spec.max_ticks
              << " max_epochs=" << spec.max_epochs << " script=";
        for (const auto& e : spec.script) canon << e.lo.value << '-' << e.hi.value << ' ';
        spec.canonical = canon.str() + '\n';
        spec.cells();
    }
    return spec;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulator and verifier for quantized dissensus gossip with death and duplication events"};
    app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
    app.require_subcommand(1);
    Options o;

    auto* run = app.add_subcommand("run", "Run one configuration and write its artifacts");
    run->add_option("--config,-c", o.config, "Experiment config file")->required()->check(CLI::ExistingFile);
    run->add_option("--out,-o", o.out, "Output directory");
    run->add_option("--seed", o.seed, "Override the run seed");
    run->add_option("--max-ticks", o.max_ticks, "Override the tick budget");
    run->add_option("--max-epochs", o.max_epochs, "Override the epoch budget (0 = unlimited)");
    run->add_option("--emit", o.emit, "Comma list of outputs: trace, snapshots, frames, svg, report");
    run->add_option("--script", o.script, "Edge script (one 'u v' per line); selects the scripted scheduler")
        ->check(CLI::ExistingFile);

    auto* verify = app.add_subcommand("verify", "Check invariants of a trace file or of a config's runs");
    auto* vc = verify->add_option("--config,-c", o.config, "Experiment config file")->check(CLI::ExistingFile);
    auto* vt = verify->add_option("--trace,-t", o.trace, "Recorded trace (JSONL)")->check(CLI::ExistingFile);
    vc->excludes(vt);
    verify->add_option("--snapshots", o.snapshots, "Epoch snapshots recorded next to the trace")
        ->check(CLI::ExistingFile)
        ->needs(vt);
    verify->add_option("--seed", o.seed, "Override the run seed");
    verify->add_option("--max-ticks", o.max_ticks, "Override the tick budget");
    verify->add_option("--max-epochs", o.max_epochs, "Override the epoch budget (0 = unlimited)");
    auto* vo = verify->add_flag("--oracle", o.oracle, "Exhaustively explore every schedule (unit delta, chi <= 12)");
    verify->add_option("--oracle-agents", o.oracle_agents,
                       "With --oracle: explore every start on up to this many agents instead of the config's start")
        ->needs(vo);
    verify->add_option("--horizon", o.horizon, "With --oracle: maximum gossip depth (0 = unbounded)")->needs(vo);
    vo->needs(vc);

    auto* sweep = app.add_subcommand("sweep", "Run every cell of a config's [sweep] grid");
    sweep->add_option("--config,-c", o.config, "Experiment config file")->required()->check(CLI::ExistingFile);
    sweep->add_option("--out,-o", o.out, "Output directory (sweep.csv is written there)");
    sweep->add_option("--max-ticks", o.max_ticks, "Override the tick budget");
    sweep->add_option("--max-epochs", o.max_epochs, "Override the epoch budget (0 = unlimited)");
    sweep->add_option("--threads", o.threads, "Worker threads (0 = hardware concurrency)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*run) return cmd_run(load(o), std::cout, std::cerr);
        if (*verify) {
            if (!o.trace.empty()) {
                std::optional<std::filesystem::path> snaps;
                if (!o.snapshots.empty()) snaps = o.snapshots;
                return cmd_verify_trace(o.trace, std::cout, std::cerr, snaps);
            }
            if (o.config.empty()) {
                std::cerr << "verify needs --trace or --config\n";
                return kConfigError;
            }
            const auto spec = load(o);
            if (o.oracle) {
                analysis::OracleOptions opts;
                opts.horizon = o.horizon;
                return cmd_verify_oracle(spec, o.oracle_agents, opts, std::cout, std::cerr);
            }
            return cmd_verify_spec(spec, std::cout, std::cerr);
        }
        if (*sweep) {
            const auto spec = load(o);
            std::filesystem::create_directories(spec.out_dir);
            const auto path = std::filesystem::path(spec.out_dir) / "sweep.csv";
            std::ofstream csv(path, std::ios::binary);
            if (!csv) throw Error("cannot write " + path.string());
            const int code = cmd_sweep(spec, csv, std::cerr, o.threads);
            std::cout << "wrote " << path.string() << '\n';
            return code;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const ProtocolFault& e) {
        std::cerr << "protocol fault: " << e.what() << '\n';
        return kInternalError;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kInternalError;
    }
    return kInternalError;
}
