#pragma once

#include "engine.hpp"
#include "errors.hpp"
#include "hash.hpp"
#include "version.hpp"

#include <json.hpp>

#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace dissensus {

using json = nlohmann::json;

namespace io {

inline json ids_json(const std::set<AgentId>& ids) {
    json out = json::array();
    for (auto a : ids) out.push_back(a.value);
    return out;
}

inline std::set<AgentId> ids_from(const json& j) {
    std::set<AgentId> out;
    for (const auto& v : j) out.insert(AgentId{v.get<std::uint64_t>()});
    return out;
}

inline json edge_json(const Edge& e) { return json::array({e.lo.value, e.hi.value}); }

inline Edge edge_from(const json& j) {
    if (!j.is_array() || j.size() != 2) throw ConfigError("edge must be [u, v]");
    return Edge::between(AgentId{j[0].get<std::uint64_t>()}, AgentId{j[1].get<std::uint64_t>()});
}

template <typename Range>
json edges_json(const Range& edges) {
    json out = json::array();
    for (const auto& e : edges) out.push_back(edge_json(e));
    return out;
}

inline std::vector<Edge> edges_from(const json& j) {
    std::vector<Edge> out;
    for (const auto& e : j) out.push_back(edge_from(e));
    return out;
}

inline json states_json(const StateMap& x) {
    json out = json::array();
    for (const auto& [a, v] : x) out.push_back(json::array({a.value, v}));
    return out;
}

inline StateMap states_from(const json& j) {
    StateMap out;
    for (const auto& p : j) out[AgentId{p.at(0).get<std::uint64_t>()}] = p.at(1).get<Quanta>();
    return out;
}

template <typename Enum>
Enum enum_from(const std::string& name, std::initializer_list<Enum> values, const char* what) {
    for (auto v : values)
        if (name == to_string(v)) return v;
    throw ConfigError(std::string("unknown ") + what + " '" + name + "'");
}

}  // namespace io

inline json to_json(const RunConfig& c) {
    json j;
    j["B"] = c.B;
    j["states"] = io::states_json(c.states);
    j["edges"] = io::edges_json(c.edges);
    j["delta"] = to_string(c.delta);
    j["scheduler"] = to_string(c.scheduler);
    j["script"] = io::edges_json(c.script);
    j["rules"] = ruleset_name(c.rules);
    j["split"] = c.rules.split.kind == SplitPolicy::Kind::Half ? json("half") : json(c.rules.split.alpha);
    j["seed"] = c.seed;
    j["max_ticks"] = c.max_ticks;
    j["max_epochs"] = c.max_epochs;
    j["periodicity"] = c.detect_periodicity;
    return j;
}

inline RunConfig run_config_from_json(const json& j) {
    RunConfig c;
    c.B = j.at("B").get<Quanta>();
    c.states = io::states_from(j.at("states"));
    c.edges = io::edges_from(j.at("edges"));
    c.delta = io::enum_from(j.at("delta").get<std::string>(), {DeltaKind::Unit, DeltaKind::Max, DeltaKind::Uniform},
                            "delta policy");
    c.scheduler = io::enum_from(j.at("scheduler").get<std::string>(),
                                {SchedulerKind::RoundRobin, SchedulerKind::Random, SchedulerKind::Scripted},
                                "scheduler");
    c.script = io::edges_from(j.at("script"));
    c.rules = parse_ruleset(j.at("rules").get<std::string>());
    const auto& split = j.at("split");
    c.rules.split = split.is_string() ? SplitPolicy::half() : SplitPolicy::fixed(split.get<Quanta>());
    c.seed = j.at("seed").get<std::uint64_t>();
    c.max_ticks = j.at("max_ticks").get<std::int64_t>();
    c.max_epochs = j.at("max_epochs").get<std::int64_t>();
    c.detect_periodicity = j.at("periodicity").get<bool>();
    return c;
}

inline std::string config_hash(const RunConfig& c) { return to_hex(fnv1a(to_json(c).dump())); }

inline json to_json(const GossipRecord& r) {
    return {{"type", "gossip"},
            {"tick", r.tick},
            {"edge", io::edge_json(r.edge)},
            {"delta", r.delta},
            {"x", json::array({r.x_lo, r.x_hi})}};
}

inline json to_json(const CriticalEventRecord& r) {
    json j{{"type", "event"}, {"epoch", r.epoch}, {"tick", r.tick}, {"kind", to_string(r.kind())},
           {"subject", r.subject().value}};
    if (const auto* d = std::get_if<DeathPatch>(&r.patch)) {
        j["lam"] = io::ids_json(d->lam);
        json inh = json::array();
        for (const auto& [a, set] : d->inherited) inh.push_back(json::array({a.value, io::ids_json(set)}));
        j["inherited"] = std::move(inh);
        j["eps"] = io::edges_json(d->eps);
    } else {
        const auto& p = std::get<DuplicationPatch>(r.patch);
        j["children"] = json::array({p.child1.value, p.child2.value});
        j["lam"] = io::ids_json(p.lam);
        j["child1_neighbors"] = io::ids_json(p.child1_neighbors);
        j["child2_neighbors"] = io::ids_json(p.child2_neighbors);
        j["eps"] = io::edges_json(p.eps);
        j["alpha"] = p.alpha;
        j["beta"] = p.beta;
    }
    return j;
}

inline GossipRecord gossip_record_from(const json& j) {
    return {j.at("tick").get<std::int64_t>(), io::edge_from(j.at("edge")), j.at("delta").get<Quanta>(),
            j.at("x").at(0).get<Quanta>(), j.at("x").at(1).get<Quanta>()};
}

inline CriticalEventRecord event_record_from(const json& j) {
    CriticalEventRecord r;
    r.epoch = j.at("epoch").get<std::int64_t>();
    r.tick = j.at("tick").get<std::int64_t>();
    const auto kind = j.at("kind").get<std::string>();
    const AgentId subject{j.at("subject").get<std::uint64_t>()};
    if (kind == "death") {
        DeathPatch p;
        p.subject = subject;
        p.lam = io::ids_from(j.at("lam"));
        for (const auto& e : j.at("inherited"))
            p.inherited[AgentId{e.at(0).get<std::uint64_t>()}] = io::ids_from(e.at(1));
        const auto eps = io::edges_from(j.at("eps"));
        p.eps = {eps.begin(), eps.end()};
        r.patch = std::move(p);
    } else if (kind == "duplication") {
        DuplicationPatch p;
        p.subject = subject;
        p.child1 = AgentId{j.at("children").at(0).get<std::uint64_t>()};
        p.child2 = AgentId{j.at("children").at(1).get<std::uint64_t>()};
        p.lam = io::ids_from(j.at("lam"));
        p.child1_neighbors = io::ids_from(j.at("child1_neighbors"));
        p.child2_neighbors = io::ids_from(j.at("child2_neighbors"));
        const auto eps = io::edges_from(j.at("eps"));
        p.eps = {eps.begin(), eps.end()};
        p.alpha = j.at("alpha").get<Quanta>();
        p.beta = j.at("beta").get<Quanta>();
        r.patch = std::move(p);
    } else {
        throw ConfigError("unknown event kind '" + kind + "'");
    }
    return r;
}

inline json header_json(const char* format, const RunConfig& cfg) {
    return {{"format", format},
            {"version", kTraceFormatVersion},
            {"tool", std::string(kToolName) + " " + kToolVersion},
            {"config_hash", config_hash(cfg)}};
}

// Newline-delimited trace: header, init (full run configuration), one line per
// gossip tick or critical event in replay order, end (termination and final
// configuration).
inline void write_trace(std::ostream& os, const Trace& t) {
    os << header_json("dissensus-trace", t.config).dump() << '\n';
    os << json{{"type", "init"}, {"config", to_json(t.config)}}.dump() << '\n';
    for_each_record(t, [&](const auto& r) { os << to_json(r).dump() << '\n'; });
    json end{{"type", "end"},
             {"termination", to_string(t.termination)},
             {"tick", t.final_state.tick},
             {"epoch", t.final_state.epoch},
             {"x", io::states_json(t.final_state.x)},
             {"edges", io::edges_json(t.final_state.edges)}};
    if (t.period)
        end["period"] = {{"start_epoch", t.period->start_epoch},
                         {"length_epochs", t.period->length_epochs},
                         {"start_tick", t.period->start_tick},
                         {"length_ticks", t.period->length_ticks}};
    os << end.dump() << '\n';
}

inline std::string trace_to_string(const Trace& t) {
    std::ostringstream os;
    write_trace(os, t);
    return os.str();
}

namespace io {

inline void check_header(const json& h, const char* format, std::size_t line) {
    if (!h.is_object() || h.value("format", "") != format)
        throw ParseError(line, std::string("expected a '") + format + "' header");
    if (h.value("version", 0) != kTraceFormatVersion)
        throw ParseError(line, "unsupported format version " + h.value("version", json()).dump());
}

}  // namespace io

// Parses a trace file. Snapshots are not part of the trace stream; see
// read_snapshots. Any malformed or missing piece raises ParseError with the
// offending line number.
inline Trace read_trace(std::istream& is) {
    Trace t;
    std::string line;
    std::size_t lineno = 0;
    bool have_init = false, have_end = false;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (have_end) throw ParseError(lineno, "data after end record");
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(lineno, std::string("malformed record: ") + e.what());
        }
        try {
            if (lineno == 1) {
                io::check_header(j, "dissensus-trace", lineno);
                continue;
            }
            const auto type = j.at("type").get<std::string>();
            if (!have_init) {
                if (type != "init") throw ParseError(lineno, "expected init record");
                t.config = run_config_from_json(j.at("config"));
                have_init = true;
            } else if (type == "gossip") {
                t.gossip.push_back(gossip_record_from(j));
            } else if (type == "event") {
                t.events.push_back(event_record_from(j));
            } else if (type == "end") {
                t.termination = io::enum_from(j.at("termination").get<std::string>(),
                                              {Termination::Consensus, Termination::MaxTicks, Termination::MaxEpochs,
                                               Termination::Periodic, Termination::SingleAgent},
                                              "termination");
                t.final_state = {j.at("tick").get<std::int64_t>(), j.at("epoch").get<std::int64_t>(),
                                 io::states_from(j.at("x")), io::edges_from(j.at("edges"))};
                if (j.contains("period")) {
                    const auto& p = j.at("period");
                    t.period = Period{p.at("start_epoch").get<std::int64_t>(), p.at("length_epochs").get<std::int64_t>(),
                                      p.at("start_tick").get<std::int64_t>(), p.at("length_ticks").get<std::int64_t>()};
                }
                have_end = true;
            } else {
                throw ParseError(lineno, "unknown record type '" + type + "'");
            }
        } catch (const ParseError&) {
            throw;
        } catch (const json::exception& e) {
            throw ParseError(lineno, e.what());
        } catch (const Error& e) {
            throw ParseError(lineno, e.what());
        }
    }
    if (lineno == 0) throw ParseError(1, "empty trace");
    if (!have_end) throw ParseError(lineno + 1, "truncated trace: missing end record");
    return t;
}

inline json to_json(const EpochSnapshot& s) {
    return {{"epoch", s.epoch},
            {"tick", s.tick},
            {"cause", s.cause ? json(to_string(*s.cause)) : json("initial")},
            {"agents", s.agents},
            {"edges", s.edges},
            {"cycles", s.cycles},
            {"shape", to_string(s.shape)},
            {"x", io::states_json(s.x)}};
}

// Epoch snapshot sidecar: header line, then one snapshot per epoch.
inline void write_snapshots(std::ostream& os, const Trace& t) {
    os << header_json("dissensus-snapshots", t.config).dump() << '\n';
    for (const auto& s : t.snapshots) os << to_json(s).dump() << '\n';
}

inline std::vector<EpochSnapshot> read_snapshots(std::istream& is) {
    std::vector<EpochSnapshot> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            const auto j = json::parse(line);
            if (lineno == 1) {
                io::check_header(j, "dissensus-snapshots", lineno);
                continue;
            }
            EpochSnapshot s;
            s.epoch = j.at("epoch").get<std::int64_t>();
            s.tick = j.at("tick").get<std::int64_t>();
            const auto cause = j.at("cause").get<std::string>();
            if (cause == "death") s.cause = EventKind::Death;
            else if (cause == "duplication") s.cause = EventKind::Duplication;
            s.agents = j.at("agents").get<std::size_t>();
            s.edges = j.at("edges").get<std::size_t>();
            s.cycles = j.at("cycles").get<std::int64_t>();
            const auto shape = j.at("shape").get<std::string>();
            s.shape = {shape.find("complete") != std::string::npos, shape.find("hole") != std::string::npos,
                       shape.find("chain") != std::string::npos};
            s.x = io::states_from(j.at("x"));
            out.push_back(std::move(s));
        } catch (const ParseError&) {
            throw;
        } catch (const json::exception& e) {
            throw ParseError(lineno, e.what());
        }
    }
    return out;
}

}  // namespace dissensus
