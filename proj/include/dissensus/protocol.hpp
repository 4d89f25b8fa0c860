#pragma once

#include "errors.hpp"
#include "graph.hpp"
#include "rng.hpp"

#include <algorithm>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace dissensus {

// Configuration the protocol evolves: integer states on a dynamic topology.
struct SystemState {
    StateMap x;
    Topology g;
    std::int64_t tick = 0;   // integer time r
    std::int64_t epoch = 0;  // critical events resolved so far
    Quanta chi = 0;          // conserved total
    Quanta B = 0;            // upper threshold
    std::uint64_t next_id = 0;

    Quanta value(AgentId a) const {
        auto it = x.find(a);
        if (it == x.end()) throw ProtocolFault("unknown agent " + std::to_string(a.value));
        return it->second;
    }

    Quanta total() const {
        Quanta sum = 0;
        for (const auto& [_, v] : x) sum += v;
        return sum;
    }

    // Squared Euclidean norm of the state vector.
    Quanta norm2() const {
        Quanta sum = 0;
        for (const auto& [_, v] : x) sum += v * v;
        return sum;
    }

    std::size_t agent_count() const noexcept { return x.size(); }

    // The two ids a duplication would mint next, lower first.
    std::pair<AgentId, AgentId> fresh_ids() const { return {AgentId{next_id}, AgentId{next_id + 1}}; }
};

enum class DeltaKind { Unit, Max, Uniform };

inline const char* to_string(DeltaKind k) {
    switch (k) {
        case DeltaKind::Unit: return "unit";
        case DeltaKind::Max: return "max";
        case DeltaKind::Uniform: return "uniform";
    }
    return "?";
}

class DeltaPolicy {
public:
    static DeltaPolicy unit() { return DeltaPolicy(DeltaKind::Unit, 0); }
    static DeltaPolicy max() { return DeltaPolicy(DeltaKind::Max, 0); }
    static DeltaPolicy uniform(std::uint64_t seed) { return DeltaPolicy(DeltaKind::Uniform, seed); }

    DeltaKind kind() const noexcept { return kind_; }
    Rng& rng() noexcept { return rng_; }

private:
    DeltaPolicy(DeltaKind kind, std::uint64_t seed) : kind_(kind), rng_(make_stream(seed, Stream::Delta)) {}

    DeltaKind kind_;
    Rng rng_;
};

// Largest admissible transfer between two unequal states: the loser cannot go
// below 0 and the winner cannot pass B.
constexpr Quanta delta_cap(Quanta xi, Quanta xj, Quanta B) noexcept {
    return std::min(std::min(xi, xj), B - std::max(xi, xj));
}

// Transfer amount for one gossip exchange; nullopt when the states are equal
// and nothing moves.
inline std::optional<Quanta> select_delta(DeltaPolicy& policy, Quanta xi, Quanta xj, Quanta B) {
    if (xi == xj) return std::nullopt;
    const Quanta cap = delta_cap(xi, xj, B);
    if (cap < 1)
        throw ProtocolFault("no admissible delta for states " + std::to_string(xi) + ", " + std::to_string(xj) +
                            " with B=" + std::to_string(B));
    switch (policy.kind()) {
        case DeltaKind::Unit: return Quanta{1};
        case DeltaKind::Max: return cap;
        case DeltaKind::Uniform:
            return Quanta{1} + static_cast<Quanta>(draw_below(policy.rng(), static_cast<std::uint64_t>(cap)));
    }
    return Quanta{1};
}

struct GossipOutcome {
    Edge edge;
    Quanta delta = 0;  // 0 when the endpoints were equal
    Quanta x_lo = 0;   // post-step state of edge.lo
    Quanta x_hi = 0;   // post-step state of edge.hi
};

// One exchange over `edge`: the greater endpoint gains delta, the smaller
// loses it, equal endpoints are left alone. Advances the tick.
inline GossipOutcome apply_gossip(SystemState& s, const Edge& edge, Quanta delta) {
    if (!s.g.has_edge(edge))
        throw ProtocolFault("scheduled pair (" + std::to_string(edge.lo.value) + "," + std::to_string(edge.hi.value) +
                            ") is not an edge");
    auto& a = s.x.at(edge.lo);
    auto& b = s.x.at(edge.hi);
    GossipOutcome out{edge, 0, a, b};
    if (a != b) {
        if (a > b) {
            a += delta;
            b -= delta;
        } else {
            a -= delta;
            b += delta;
        }
        if (a < 0 || b < 0 || a > s.B || b > s.B)
            throw ProtocolFault("delta " + std::to_string(delta) + " pushed a state outside [0, B]");
        out = {edge, delta, a, b};
    }
    ++s.tick;
    return out;
}

inline SystemState gossip_step(SystemState s, const Edge& edge, Quanta delta) {
    apply_gossip(s, edge, delta);
    return s;
}

enum class SchedulerKind { RoundRobin, Random, Scripted };

inline const char* to_string(SchedulerKind k) {
    switch (k) {
        case SchedulerKind::RoundRobin: return "round-robin";
        case SchedulerKind::Random: return "random";
        case SchedulerKind::Scripted: return "scripted";
    }
    return "?";
}

// Edge selection. Round-robin rotates a queue rebuilt in canonical order at
// every critical event, so each live edge is chosen once per |E| ticks.
// Scripted replays a fixed edge list and then falls back to round-robin.
class Scheduler {
public:
    static Scheduler round_robin() { return Scheduler(SchedulerKind::RoundRobin, 0, {}); }
    static Scheduler random(std::uint64_t seed) { return Scheduler(SchedulerKind::Random, seed, {}); }
    static Scheduler scripted(std::vector<Edge> script) {
        return Scheduler(SchedulerKind::Scripted, 0, std::move(script));
    }

    SchedulerKind kind() const noexcept { return kind_; }
    const std::deque<Edge>& queue() const noexcept { return queue_; }

    void rebuild(const Topology& g) {
        const auto edges = g.edges();
        queue_.assign(edges.begin(), edges.end());
    }

    Edge next_edge() {
        if (queue_.empty()) throw ProtocolFault("no edge to schedule");
        if (kind_ == SchedulerKind::Scripted && cursor_ < script_.size()) return script_[cursor_++];
        if (kind_ == SchedulerKind::Random) return queue_[draw_below(rng_, queue_.size())];
        Edge e = queue_.front();
        queue_.pop_front();
        queue_.push_back(e);
        return e;
    }

private:
    Scheduler(SchedulerKind kind, std::uint64_t seed, std::vector<Edge> script)
        : kind_(kind), rng_(make_stream(seed, Stream::Scheduler)), script_(std::move(script)) {}

    SchedulerKind kind_;
    Rng rng_;
    std::deque<Edge> queue_;
    std::vector<Edge> script_;
    std::size_t cursor_ = 0;
};

enum class ThresholdKind { Zero, Upper };

struct Threshold {
    AgentId agent;
    ThresholdKind kind;

    friend bool operator==(const Threshold&, const Threshold&) = default;
};

// Agents sitting at 0 or B, in id order.
inline std::vector<Threshold> detect_thresholds(const SystemState& s) {
    std::vector<Threshold> out;
    for (const auto& [a, v] : s.x) {
        if (v == 0) out.push_back({a, ThresholdKind::Zero});
        else if (v == s.B) out.push_back({a, ThresholdKind::Upper});
    }
    return out;
}

}  // namespace dissensus
