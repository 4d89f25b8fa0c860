#pragma once

#include "../engine.hpp"
#include "../errors.hpp"
#include "../generators.hpp"
#include "../hash.hpp"
#include "../trace_io.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace dissensus::cli {

inline constexpr int kConfigSchemaVersion = 1;

enum class TopologyKind { Explicit, Hole, Chain, Complete, Random, File };

// Initial system description; generated pieces are drawn from the run seed.
struct SystemSpec {
    Quanta B = 0;
    TopologyKind topology = TopologyKind::Explicit;
    std::size_t nodes = 0;
    std::size_t edge_count = 0;
    std::vector<Edge> edges;
    std::string graph_file;
    bool random_states = false;
    std::vector<Quanta> states;
    Quanta chi = 0;
};

struct EmitFlags {
    bool trace = true;
    bool snapshots = true;
    bool frames = false;
    bool svg = false;
    bool report = true;
};

struct SweepAxes {
    std::vector<std::uint64_t> seeds;
    std::vector<Quanta> Bs;
    std::vector<RuleSet> rulesets;

    bool empty() const { return seeds.empty() && Bs.empty() && rulesets.empty(); }
};

struct Cell {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    Quanta B = 0;
    RuleSet rules;
    RunConfig config;
};

struct ExperimentSpec {
    SystemSpec system;
    DeltaKind delta = DeltaKind::Unit;
    SchedulerKind scheduler = SchedulerKind::RoundRobin;
    std::vector<Edge> script;
    RuleSet rules;
    std::uint64_t seed = 0;
    std::int64_t max_ticks = 1'000'000;
    std::int64_t max_epochs = 0;
    bool periodicity = false;
    std::string out_dir = "out";
    EmitFlags emit;
    SweepAxes sweep;
    std::string canonical;  // normalized key=value text, hashed into outputs

    std::string hash() const { return to_hex(fnv1a(canonical)); }

    RunConfig expand(std::uint64_t cell_seed, Quanta B, const RuleSet& cell_rules) const;
    RunConfig base() const { return expand(seed, system.B, rules); }
    std::vector<Cell> cells() const;
};

namespace detail {

inline std::string trim(std::string s) {
    auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
    s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
    s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
    return s;
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

inline std::int64_t parse_int(const std::string& key, const std::string& text) {
    try {
        std::size_t used = 0;
        const auto v = std::stoll(text, &used);
        if (used == text.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError(key + ": expected an integer, got '" + text + "'");
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& text) {
    const auto v = parse_int(key, text);
    if (v < 0) throw ConfigError(key + ": expected a non-negative integer, got '" + text + "'");
    return static_cast<std::uint64_t>(v);
}

inline bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "yes" || text == "on" || text == "1") return true;
    if (text == "false" || text == "no" || text == "off" || text == "0") return false;
    throw ConfigError(key + ": expected a boolean, got '" + text + "'");
}

// "1..5", "1,2,7" or a mix.
inline std::vector<std::int64_t> parse_int_axis(const std::string& key, const std::string& text) {
    std::vector<std::int64_t> out;
    for (const auto& item : split_list(text)) {
        const auto dots = item.find("..");
        if (dots == std::string::npos) {
            out.push_back(parse_int(key, item));
            continue;
        }
        const auto lo = parse_int(key, item.substr(0, dots)), hi = parse_int(key, item.substr(dots + 2));
        if (hi < lo) throw ConfigError(key + ": empty range '" + item + "'");
        for (auto v = lo; v <= hi; ++v) out.push_back(v);
    }
    if (out.empty()) throw ConfigError(key + ": empty list");
    return out;
}

inline Edge parse_edge(const std::string& key, const std::string& text) {
    const auto dash = text.find('-');
    if (dash == std::string::npos) throw ConfigError(key + ": edge '" + text + "' must look like u-v");
    const auto u = parse_uint(key, text.substr(0, dash)), v = parse_uint(key, text.substr(dash + 1));
    if (u == v) throw ConfigError(key + ": self-loop '" + text + "'");
    return Edge::between(AgentId{u}, AgentId{v});
}

// Script file: one "u v" edge per line, '#' comments.
inline std::vector<Edge> read_script(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open script file '" + path.string() + "'");
    std::vector<Edge> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line.substr(0, line.find('#')));
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::uint64_t u, v;
        std::string rest;
        if (!(ls >> u >> v) || (ls >> rest) || u == v)
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected 'u v'");
        out.push_back(Edge::between(AgentId{u}, AgentId{v}));
    }
    return out;
}

}  // namespace detail

inline RunConfig ExperimentSpec::expand(std::uint64_t cell_seed, Quanta B, const RuleSet& cell_rules) const {
    RunConfig c;
    c.B = B;
    c.delta = delta;
    c.scheduler = scheduler;
    c.script = script;
    c.rules = cell_rules;
    c.seed = cell_seed;
    c.max_ticks = max_ticks;
    c.max_epochs = max_epochs;
    c.detect_periodicity = periodicity;

    auto rng = make_stream(cell_seed, Stream::Init);
    Topology g;
    try {
    switch (system.topology) {
        case TopologyKind::Explicit: {
            const auto ids = gen::id_range(system.random_states ? system.nodes : system.states.size());
            g = Topology::from_edges(ids, {});
            for (const auto& e : system.edges) {
                if (!g.contains(e.lo) || !g.contains(e.hi))
                    throw ConfigError("system.edges: edge " + std::to_string(e.lo.value) + "-" +
                                      std::to_string(e.hi.value) + " references an agent outside 1.." +
                                      std::to_string(ids.size()));
                if (!g.add_edge(e.lo, e.hi))
                    throw ConfigError("system.edges: duplicate edge " + std::to_string(e.lo.value) + "-" +
                                      std::to_string(e.hi.value));
            }
            break;
        }
        case TopologyKind::Hole: g = gen::hole(system.nodes); break;
        case TopologyKind::Chain: g = gen::chain(system.nodes); break;
        case TopologyKind::Complete: g = gen::complete(system.nodes); break;
        case TopologyKind::Random: g = gen::random_connected(system.nodes, system.edge_count, rng); break;
        case TopologyKind::File: {
            std::ifstream in(system.graph_file);
            if (!in) throw ConfigError("system.graph_file: cannot open '" + system.graph_file + "'");
            try {
                g = read_edge_list(in);
            } catch (const ParseError& e) {
                throw ConfigError("system.graph_file: " + std::string(e.what()));
            }
            break;
        }
    }
    } catch (const ConfigError& e) {
        const std::string what = e.what();
        throw ConfigError(what.rfind("system.", 0) == 0 ? what : "system.topology: " + what);
    }
    const auto ids = g.nodes();
    std::vector<Quanta> values;
    if (system.random_states) {
        try {
            values = gen::random_states(ids.size(), system.chi, B, rng);
        } catch (const ConfigError& e) {
            throw ConfigError(std::string("system.chi: ") + e.what());
        }
    } else {
        values = system.states;
        if (values.size() != ids.size())
            throw ConfigError("system.states: " + std::to_string(values.size()) + " states for " +
                              std::to_string(ids.size()) + " agents");
    }
    for (std::size_t i = 0; i < ids.size(); ++i) c.states[ids[i]] = values[i];
    c.edges = g.edges();

    try {
        split_state(B, cell_rules.split);
    } catch (const ConfigError& e) {
        throw ConfigError((cell_rules.split.kind == SplitPolicy::Kind::Half ? "system.B: " : "rules.split: ") +
                          std::string(e.what()));
    }
    try {
        validate_config(c);
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("system: ") + e.what());
    }
    return c;
}

inline std::vector<Cell> ExperimentSpec::cells() const {
    const std::vector<std::uint64_t> seeds = sweep.seeds.empty() ? std::vector<std::uint64_t>{seed} : sweep.seeds;
    const std::vector<Quanta> Bs = sweep.Bs.empty() ? std::vector<Quanta>{system.B} : sweep.Bs;
    const std::vector<RuleSet> rulesets = sweep.rulesets.empty() ? std::vector<RuleSet>{rules} : sweep.rulesets;
    std::vector<Cell> out;
    for (const auto& r : rulesets)
        for (auto B : Bs)
            for (auto s : seeds) {
                const auto index = out.size();
                try {
                    out.push_back({index, s, B, r, expand(s, B, r)});
                } catch (const ConfigError& e) {
                    if (sweep.empty()) throw;
                    throw ConfigError("sweep cell " + std::to_string(index) + " (seed=" + std::to_string(s) +
                                      ", B=" + std::to_string(B) + ", rules=" + ruleset_name(r) + "): " + e.what());
                }
            }
    return out;
}

namespace detail {

inline const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"", {"version"}},
        {"system", {"B", "states", "chi", "topology", "nodes", "edge_count", "edges", "graph_file"}},
        {"rules", {"delta", "scheduler", "script", "death", "jstar", "duplication", "split"}},
        {"run", {"seed", "max_ticks", "max_epochs", "periodicity"}},
        {"output", {"dir", "emit"}},
        {"sweep", {"seeds", "B", "rulesets"}},
    };
    return keys;
}

inline EmitFlags parse_emit(const std::string& key, const std::string& text) {
    EmitFlags f{false, false, false, false, false};
    for (const auto& item : split_list(text)) {
        if (item == "trace") f.trace = true;
        else if (item == "snapshots") f.snapshots = true;
        else if (item == "frames") f.frames = true;
        else if (item == "svg") f.frames = f.svg = true;
        else if (item == "report") f.report = true;
        else throw ConfigError(key + ": unknown output '" + item + "' (trace, snapshots, frames, svg, report)");
    }
    return f;
}

}  // namespace detail

inline EmitFlags parse_emit(const std::string& text) { return detail::parse_emit("--emit", text); }

// Parses the sectioned key = value format. Unknown keys, malformed values and
// constraint violations raise ConfigError naming the key. Relative file paths
// are resolved against base_dir. Every sweep cell is expanded and validated.
inline ExperimentSpec parse_config_text(const std::string& text, const std::filesystem::path& base_dir = {}) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        std::istringstream in(text);
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
    }

    std::map<std::string, std::string> flat;
    const auto& schema = detail::schema();
    for (const auto& [name, node] : tree) {
        if (node.empty()) {
            if (!schema.at("").count(name)) throw ConfigError("unknown key '" + name + "'");
            flat[name] = detail::trim(node.data());
            continue;
        }
        auto section = schema.find(name);
        if (section == schema.end() || name.empty()) throw ConfigError("unknown section '[" + name + "]'");
        for (const auto& [key, leaf] : node) {
            if (!section->second.count(key)) throw ConfigError("unknown key '" + name + "." + key + "'");
            flat[name + "." + key] = detail::trim(leaf.data());
        }
    }

    auto get = [&](const std::string& key) -> const std::string* {
        auto it = flat.find(key);
        return it == flat.end() ? nullptr : &it->second;
    };
    auto resolve = [&](const std::string& p) {
        std::filesystem::path path(p);
        return path.is_relative() && !base_dir.empty() ? (base_dir / path).string() : path.string();
    };

    ExperimentSpec spec;
    if (const auto* v = get("version")) {
        if (detail::parse_int("version", *v) != kConfigSchemaVersion)
            throw ConfigError("version: unsupported config version " + *v);
    }

    // [system]
    const auto* B = get("system.B");
    if (!B) throw ConfigError("system.B: required");
    spec.system.B = detail::parse_int("system.B", *B);
    if (spec.system.B < 2) throw ConfigError("system.B: split_state requires B ≥ 2 (got B=" + *B + ")");

    const std::string topology = get("system.topology") ? *get("system.topology") : "explicit";
    static const std::map<std::string, TopologyKind> topologies{
        {"explicit", TopologyKind::Explicit}, {"hole", TopologyKind::Hole},     {"chain", TopologyKind::Chain},
        {"complete", TopologyKind::Complete}, {"random", TopologyKind::Random}, {"file", TopologyKind::File}};
    auto t = topologies.find(topology);
    if (t == topologies.end())
        throw ConfigError("system.topology: unknown topology '" + topology +
                          "' (explicit, hole, chain, complete, random, file)");
    spec.system.topology = t->second;
    if (const auto* g = get("system.graph_file")) {
        if (spec.system.topology != TopologyKind::File && get("system.topology"))
            throw ConfigError("system.graph_file: only valid with topology = file");
        spec.system.topology = TopologyKind::File;
        spec.system.graph_file = resolve(*g);
    } else if (spec.system.topology == TopologyKind::File) {
        throw ConfigError("system.graph_file: required by topology = file");
    }
    if (const auto* e = get("system.edges")) {
        if (spec.system.topology != TopologyKind::Explicit)
            throw ConfigError("system.edges: only valid with an explicit topology");
        std::set<Edge> seen;
        for (const auto& item : detail::split_list(*e)) {
            const auto edge = detail::parse_edge("system.edges", item);
            if (!seen.insert(edge).second)
                throw ConfigError("system.edges: duplicate edge " + item + " (the topology is a simple graph)");
            spec.system.edges.push_back(edge);
        }
    }
    if (const auto* n = get("system.nodes")) spec.system.nodes = detail::parse_uint("system.nodes", *n);
    if (const auto* m = get("system.edge_count")) spec.system.edge_count = detail::parse_uint("system.edge_count", *m);
    const auto* states = get("system.states");
    if (!states) throw ConfigError("system.states: required (a list of values or 'random')");
    if (*states == "random") {
        spec.system.random_states = true;
        const auto* chi = get("system.chi");
        if (!chi) throw ConfigError("system.chi: required when states = random");
        spec.system.chi = detail::parse_int("system.chi", *chi);
    } else {
        if (get("system.chi")) throw ConfigError("system.chi: only valid when states = random");
        for (const auto& item : detail::split_list(*states))
            spec.system.states.push_back(detail::parse_int("system.states", item));
        if (spec.system.states.empty()) throw ConfigError("system.states: empty list");
    }
    const bool needs_nodes = spec.system.topology == TopologyKind::Hole || spec.system.topology == TopologyKind::Chain ||
                             spec.system.topology == TopologyKind::Complete ||
                             spec.system.topology == TopologyKind::Random ||
                             (spec.system.topology == TopologyKind::Explicit && spec.system.random_states);
    if (needs_nodes && spec.system.nodes == 0) {
        if (spec.system.random_states) throw ConfigError("system.nodes: required for this topology");
        spec.system.nodes = spec.system.states.size();
    }
    if (spec.system.topology == TopologyKind::Random && !get("system.edge_count"))
        throw ConfigError("system.edge_count: required by topology = random");

    // [rules]
    auto pick = [&](const std::string& key, const std::map<std::string, int>& options, int fallback) {
        const auto* v = get(key);
        if (!v) return fallback;
        auto it = options.find(*v);
        if (it == options.end()) {
            std::string names;
            for (const auto& [name, _] : options) names += (names.empty() ? "" : ", ") + name;
            throw ConfigError(key + ": unknown value '" + *v + "' (" + names + ")");
        }
        return it->second;
    };
    spec.delta = static_cast<DeltaKind>(pick("rules.delta",
                                             {{"unit", int(DeltaKind::Unit)},
                                              {"max", int(DeltaKind::Max)},
                                              {"uniform", int(DeltaKind::Uniform)}},
                                             int(DeltaKind::Unit)));
    spec.scheduler = static_cast<SchedulerKind>(pick("rules.scheduler",
                                                     {{"round-robin", int(SchedulerKind::RoundRobin)},
                                                      {"random", int(SchedulerKind::Random)},
                                                      {"scripted", int(SchedulerKind::Scripted)}},
                                                     int(SchedulerKind::RoundRobin)));
    if (const auto* s = get("rules.script")) {
        spec.script = detail::read_script(resolve(*s));
        if (!get("rules.scheduler")) spec.scheduler = SchedulerKind::Scripted;
    }
    if (spec.scheduler == SchedulerKind::Scripted && spec.script.empty())
        throw ConfigError("rules.script: required by scheduler = scripted");
    spec.rules.death = static_cast<DeathRule>(
        pick("rules.death", {{"star", int(DeathRule::Star)}, {"clique", int(DeathRule::Clique)}}, int(DeathRule::Star)));
    spec.rules.jstar = static_cast<JStarPolicy>(pick(
        "rules.jstar", {{"max-state", int(JStarPolicy::MaxState)}, {"random", int(JStarPolicy::Random)}},
        int(JStarPolicy::MaxState)));
    spec.rules.duplication = static_cast<DuplicationRule>(
        pick("rules.duplication", {{"partition", int(DuplicationRule::Partition)}, {"full", int(DuplicationRule::Full)}},
             int(DuplicationRule::Partition)));
    if (const auto* s = get("rules.split"); s && *s != "half")
        spec.rules.split = SplitPolicy::fixed(detail::parse_int("rules.split", *s));

    // [run]
    if (const auto* v = get("run.seed")) spec.seed = detail::parse_uint("run.seed", *v);
    if (const auto* v = get("run.max_ticks")) spec.max_ticks = static_cast<std::int64_t>(detail::parse_uint("run.max_ticks", *v));
    if (const auto* v = get("run.max_epochs")) spec.max_epochs = static_cast<std::int64_t>(detail::parse_uint("run.max_epochs", *v));
    if (const auto* v = get("run.periodicity")) spec.periodicity = detail::parse_bool("run.periodicity", *v);

    // [output]
    if (const auto* v = get("output.dir")) spec.out_dir = resolve(*v);
    if (const auto* v = get("output.emit")) spec.emit = detail::parse_emit("output.emit", *v);

    // [sweep]
    if (const auto* v = get("sweep.seeds"))
        for (auto s : detail::parse_int_axis("sweep.seeds", *v)) {
            if (s < 0) throw ConfigError("sweep.seeds: seeds must be non-negative");
            spec.sweep.seeds.push_back(static_cast<std::uint64_t>(s));
        }
    if (const auto* v = get("sweep.B"))
        for (auto b : detail::parse_int_axis("sweep.B", *v)) {
            if (b < 2) throw ConfigError("sweep.B: split_state requires B ≥ 2 (got B=" + std::to_string(b) + ")");
            spec.sweep.Bs.push_back(b);
        }
    if (const auto* v = get("sweep.rulesets"))
        for (const auto& name : detail::split_list(*v)) {
            try {
                auto r = parse_ruleset(name);
                r.split = spec.rules.split;
                spec.sweep.rulesets.push_back(r);
            } catch (const ConfigError& e) {
                throw ConfigError(std::string("sweep.rulesets: ") + e.what());
            }
        }

    std::ostringstream canon;
    for (const auto& [key, value] : flat)
        if (key.rfind("output.", 0) != 0) canon << key << '=' << value << '\n';
    if (!spec.script.empty()) {
        canon << "script=";
        for (const auto& e : spec.script) canon << e.lo.value << '-' << e.hi.value << ' ';
        canon << '\n';
    }
    spec.canonical = canon.str();

    spec.cells();  // validates every cell
    return spec;
}

inline ExperimentSpec parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config_text(text.str(), path.parent_path());
}

}  // namespace dissensus::cli
