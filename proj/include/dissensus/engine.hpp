#pragma once

#include "errors.hpp"
#include "events.hpp"
#include "graph.hpp"
#include "protocol.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

namespace dissensus {

struct RunConfig {
    Quanta B = 0;
    StateMap states;
    std::vector<Edge> edges;
    DeltaKind delta = DeltaKind::Unit;
    SchedulerKind scheduler = SchedulerKind::RoundRobin;
    std::vector<Edge> script;  // scripted scheduler only
    RuleSet rules;
    std::uint64_t seed = 0;
    std::int64_t max_ticks = 1'000'000;
    std::int64_t max_epochs = 0;  // 0: unbounded
    bool detect_periodicity = false;

    Quanta chi() const {
        Quanta sum = 0;
        for (const auto& [_, v] : states) sum += v;
        return sum;
    }

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// Throws ConfigError naming the first violated requirement.
inline void validate_config(const RunConfig& cfg) {
    split_state(cfg.B, cfg.rules.split);
    if (cfg.states.empty()) throw ConfigError("at least one agent is required");
    for (const auto& [a, v] : cfg.states)
        if (v < 0 || v > cfg.B)
            throw ConfigError("state of agent " + std::to_string(a.value) + " is " + std::to_string(v) +
                              ", outside [0, B=" + std::to_string(cfg.B) + "]");
    const Quanta chi = cfg.chi();
    if (chi < 2) throw ConfigError("total state chi=" + std::to_string(chi) + " must be at least 2");
    if (static_cast<Quanta>(cfg.states.size()) > chi)
        throw ConfigError("more agents (" + std::to_string(cfg.states.size()) + ") than resource quanta (chi=" +
                          std::to_string(chi) + ")");
    std::vector<AgentId> ids;
    for (const auto& [a, _] : cfg.states) ids.push_back(a);
    Topology g;
    try {
        g = Topology::from_edges(ids, cfg.edges);
    } catch (const InvalidPatch& e) {
        throw ConfigError(std::string("bad edge: ") + e.what());
    }
    if (!is_connected(g)) throw ConfigError("initial topology is disconnected");
    if (cfg.max_ticks < 0 || cfg.max_epochs < 0) throw ConfigError("budgets must be non-negative");
    if (cfg.scheduler == SchedulerKind::Scripted && cfg.script.empty())
        throw ConfigError("scripted scheduler needs a non-empty script");
}

// State at t0 = 0, epoch 0.
inline SystemState init(const RunConfig& cfg) {
    validate_config(cfg);
    SystemState s;
    s.B = cfg.B;
    s.x = cfg.states;
    std::vector<AgentId> ids;
    for (const auto& [a, _] : cfg.states) ids.push_back(a);
    s.g = Topology::from_edges(ids, cfg.edges);
    s.chi = cfg.chi();
    s.next_id = ids.back().value + 1;
    return s;
}

// True iff all states are equal (vacuously for n <= 1).
inline bool detect_consensus(const SystemState& s) {
    if (s.x.size() <= 1) return true;
    const auto v = s.x.begin()->second;
    for (const auto& [_, w] : s.x)
        if (w != v) return false;
    return true;
}

// One gossip exchange: tick r, the selected edge, delta (0 when the endpoints
// were equal) and the endpoint states at r + 1.
struct GossipRecord {
    std::int64_t tick = 0;
    Edge edge;
    Quanta delta = 0;
    Quanta x_lo = 0;
    Quanta x_hi = 0;

    friend bool operator==(const GossipRecord&, const GossipRecord&) = default;
};

struct EpochSnapshot {
    std::int64_t epoch = 0;
    std::int64_t tick = 0;
    std::optional<EventKind> cause;  // empty for epoch 0
    std::size_t agents = 0;
    std::size_t edges = 0;
    std::int64_t cycles = 0;
    TopologyShape shape;
    StateMap x;

    friend bool operator==(const EpochSnapshot&, const EpochSnapshot&) = default;
};

enum class Termination { Consensus, MaxTicks, MaxEpochs, Periodic, SingleAgent };

inline const char* to_string(Termination t) {
    switch (t) {
        case Termination::Consensus: return "Consensus";
        case Termination::MaxTicks: return "MaxTicks";
        case Termination::MaxEpochs: return "MaxEpochs";
        case Termination::Periodic: return "Periodic";
        case Termination::SingleAgent: return "SingleAgent";
    }
    return "?";
}

struct Period {
    std::int64_t start_epoch = 0;
    std::int64_t length_epochs = 0;
    std::int64_t start_tick = 0;
    std::int64_t length_ticks = 0;

    friend bool operator==(const Period&, const Period&) = default;
};

struct FinalState {
    std::int64_t tick = 0;
    std::int64_t epoch = 0;
    StateMap x;
    std::vector<Edge> edges;

    friend bool operator==(const FinalState&, const FinalState&) = default;
};

// Gossip records and critical events are kept in separate streams. Their
// interleaving is fixed by the tick: events at tick t precede the gossip
// record of tick t (the exchange at t acts on the post-event state).
struct Trace {
    RunConfig config;
    std::vector<GossipRecord> gossip;
    std::vector<CriticalEventRecord> events;
    std::vector<EpochSnapshot> snapshots;
    Termination termination = Termination::MaxTicks;
    std::optional<Period> period;
    FinalState final_state;

    friend bool operator==(const Trace&, const Trace&) = default;
};

// Visits records in replay order. The visitor is called with either a
// GossipRecord or a CriticalEventRecord.
template <typename Visitor>
void for_each_record(const Trace& t, Visitor&& visit) {
    std::size_t g = 0, e = 0;
    while (g < t.gossip.size() || e < t.events.size()) {
        if (e < t.events.size() && (g == t.gossip.size() || t.events[e].tick <= t.gossip[g].tick))
            visit(t.events[e++]);
        else
            visit(t.gossip[g++]);
    }
}

inline EpochSnapshot snapshot_of(const SystemState& s, std::optional<EventKind> cause) {
    const auto components = component_count(s.g);
    const auto cycles = static_cast<std::int64_t>(s.g.edge_count()) - static_cast<std::int64_t>(s.g.node_count()) +
                        static_cast<std::int64_t>(components);
    return {s.epoch, s.tick, cause, s.g.node_count(), s.g.edge_count(), cycles, classify(s.g, components), s.x};
}

inline bool is_connected_snapshot(const EpochSnapshot& s) {
    return s.cycles - static_cast<std::int64_t>(s.edges) + static_cast<std::int64_t>(s.agents) <= 1;
}

// Recurrence detection over configurations sampled at critical times. Keys
// are compared first; a hit is confirmed on the full canonical form.
class PeriodDetector {
public:
    std::optional<Period> observe(std::int64_t epoch, std::int64_t tick, const Topology& g, const StateMap& x) {
        auto form = canonical_form(g, x);
        auto& bucket = seen_[fnv1a(form)];
        for (const auto& prior : bucket)
            if (prior.form == form) return Period{prior.epoch, epoch - prior.epoch, prior.tick, tick - prior.tick};
        bucket.push_back({epoch, tick, std::move(form)});
        return std::nullopt;
    }

private:
    struct Seen {
        std::int64_t epoch;
        std::int64_t tick;
        std::string form;
    };
    std::unordered_map<std::uint64_t, std::vector<Seen>> seen_;
};

inline DeltaPolicy make_delta_policy(DeltaKind kind, std::uint64_t seed) {
    switch (kind) {
        case DeltaKind::Unit: return DeltaPolicy::unit();
        case DeltaKind::Max: return DeltaPolicy::max();
        case DeltaKind::Uniform: return DeltaPolicy::uniform(seed);
    }
    return DeltaPolicy::unit();
}

inline Scheduler make_scheduler(const RunConfig& cfg) {
    switch (cfg.scheduler) {
        case SchedulerKind::RoundRobin: return Scheduler::round_robin();
        case SchedulerKind::Random: return Scheduler::random(cfg.seed);
        case SchedulerKind::Scripted: return Scheduler::scripted(cfg.script);
    }
    return Scheduler::round_robin();
}

// Discrete-event loop. Each step() is one tick: either the resolution of
// every pending critical event (deaths first, then duplications, each in id
// order) or one gossip exchange.
class Engine {
public:
    explicit Engine(RunConfig cfg) : Engine(cfg, catalog_rules(cfg.rules)) {}

    Engine(RunConfig cfg, EventRules rules)
        : state_(init(cfg)),
          rules_(std::move(rules)),
          delta_(make_delta_policy(cfg.delta, cfg.seed)),
          scheduler_(make_scheduler(cfg)) {
        trace_.config = std::move(cfg);
        scheduler_.rebuild(state_.g);
        trace_.snapshots.push_back(snapshot_of(state_, std::nullopt));
        if (detect_thresholds(state_).empty()) settle();
    }

    const SystemState& state() const noexcept { return state_; }
    const Trace& trace() const noexcept { return trace_; }
    bool finished() const noexcept { return finished_; }

    void step() {
        if (finished_) return;
        const auto& cfg = trace_.config;
        if (state_.tick >= cfg.max_ticks) return finish(Termination::MaxTicks);
        if (cfg.max_epochs > 0 && state_.epoch >= cfg.max_epochs) return finish(Termination::MaxEpochs);
        auto pending = detect_thresholds(state_);
        if (!pending.empty()) {
            resolve(pending);
            return;
        }
        const Edge e = scheduler_.next_edge();
        const auto tick = state_.tick;
        const auto delta = select_delta(delta_, state_.value(e.lo), state_.value(e.hi), state_.B);
        const auto out = apply_gossip(state_, e, delta.value_or(0));
        trace_.gossip.push_back({tick, e, out.delta, out.x_lo, out.x_hi});
    }

    Trace run() {
        while (!finished_) step();
        return std::move(trace_);
    }

private:
    void resolve(const std::vector<Threshold>& pending) {
        // The critical event occupies the tick after the threshold was hit.
        ++state_.tick;
        for (auto wanted : {ThresholdKind::Zero, ThresholdKind::Upper}) {
            for (const auto& t : pending) {
                if (t.kind != wanted) continue;
                auto rng = event_stream(trace_.config.seed, state_.epoch + 1);
                TopologyPatch patch = t.kind == ThresholdKind::Zero
                                          ? TopologyPatch(rules_.death(state_, t.agent, rng))
                                          : TopologyPatch(rules_.duplication(state_, t.agent, rng));
                auto record = apply_patch(state_, patch);
                auto snap = snapshot_of(state_, record.kind());
                if (!is_connected_snapshot(snap))
                    throw ProtocolFault("topology disconnected after epoch " + std::to_string(state_.epoch));
                trace_.snapshots.push_back(std::move(snap));
                trace_.events.push_back(std::move(record));
            }
        }
        scheduler_.rebuild(state_.g);
        settle();
    }

    // Terminal checks at a critical time (or t0) once nothing is pending.
    void settle() {
        if (state_.agent_count() == 1) return finish(Termination::SingleAgent);
        if (detect_consensus(state_)) return finish(Termination::Consensus);
        if (trace_.config.detect_periodicity) {
            if (auto p = periods_.observe(state_.epoch, state_.tick, state_.g, state_.x)) {
                trace_.period = p;
                return finish(Termination::Periodic);
            }
        }
    }

    void finish(Termination why) {
        finished_ = true;
        trace_.termination = why;
        trace_.final_state = {state_.tick, state_.epoch, state_.x, state_.g.edges()};
    }

    SystemState state_;
    EventRules rules_;
    DeltaPolicy delta_;
    Scheduler scheduler_;
    PeriodDetector periods_;
    Trace trace_;
    bool finished_ = false;
};

inline Trace run(const RunConfig& cfg) { return Engine(cfg).run(); }

}  // namespace dissensus
