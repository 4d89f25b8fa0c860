#pragma once

#include "../engine.hpp"
#include "../generators.hpp"
#include "../events.hpp"
#include "../graph.hpp"

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace dissensus::analysis {

struct OracleOptions {
    std::int64_t horizon = 0;  // max gossip depth; 0 explores the full reachable graph
    std::size_t max_configurations = 1'000'000;
};

struct OracleViolation {
    std::string property;
    std::string detail;
    std::vector<std::string> path;  // actions from the start configuration
};

struct ConsensusWitness {
    std::string configuration;
    std::size_t agents = 0;
    Quanta value = 0;
    bool after_duplication = false;
};

struct OracleReport {
    std::size_t configurations = 0;
    std::size_t transitions = 0;
    std::size_t consensus_before_duplication = 0;
    std::size_t consensus_after_duplication = 0;
    std::vector<ConsensusWitness> consensus;
    std::vector<OracleViolation> violations;
    // Canonical form of every reachable configuration with no pending threshold.
    std::set<std::string> reachable;
    bool aborted = false;
    std::string abort_reason;

    bool passed() const { return !aborted && violations.empty(); }
};

namespace detail {

// Exhaustive search over every edge-selection sequence (unit delta). Random
// rule choices (j*, the partition pick) are explored as branches, so every
// engine run is one path of this graph. Configurations are memoized on their
// rank-relabeled form together with the "a duplication already happened" flag.
class Oracle {
public:
    Oracle(Quanta B, Quanta chi, std::size_t n0, RuleSet rules, OracleOptions opts)
        : B_(B), chi_(chi), n0_(static_cast<Quanta>(n0)), alpha_(split_state(B, rules.split).alpha),
          rules_(rules), opts_(opts) {}

    void add_start(const SystemState& s, std::size_t index) {
        Path path{-1, "start #" + std::to_string(index)};
        epoch_checks(s, false, std::nullopt, path);
        if (!detect_thresholds(s).empty()) {
            std::vector<Resolved> out;
            resolve(s, false, path, out);
            for (auto& r : out) settle(std::move(r.state), r.duplicated, r.path, 0);
        } else {
            settle(s, false, path, 0);
        }
    }

    void explore() {
        while (!queue_.empty() && !report_.aborted) {
            const auto id = queue_.front();
            queue_.pop_front();
            const auto node = nodes_[id];  // copy: nodes_ may grow
            if (opts_.horizon > 0 && node.depth >= opts_.horizon) continue;
            for (const auto& e : node.state.g.edges()) {
                const Quanta a = node.state.value(e.lo), b = node.state.value(e.hi);
                if (a == b) continue;
                ++report_.transitions;
                SystemState next = node.state;
                const auto before = next.norm2();
                const Quanta lo = min_state(next), hi = max_state(next);
                apply_gossip(next, e, 1);
                Path path{static_cast<std::int64_t>(id),
                          "gossip (" + std::to_string(e.lo.value) + "," + std::to_string(e.hi.value) + ")"};
                const auto growth = next.norm2() - before;
                const Quanta diff = a > b ? a - b : b - a;
                if (growth < 4 || growth != 2 + 2 * diff)
                    violate("lyapunov-growth", "norm^2 changed by " + std::to_string(growth), path);
                if (!detect_thresholds(next).empty()) {
                    std::vector<Resolved> out;
                    resolve(next, node.duplicated, path, out);
                    for (auto& r : out) settle(std::move(r.state), r.duplicated, r.path, node.depth + 1);
                    continue;
                }
                if (min_state(next) > lo || max_state(next) < hi)
                    violate("monotone-extremes", "an extreme moved the wrong way", path);
                if (detect_consensus(next))
                    violate("consensus-timing", "all states equal between critical times", path);
                settle(std::move(next), node.duplicated, path, node.depth + 1);
            }
        }
    }

    OracleReport take() { return std::move(report_); }

private:
    struct Path {
        std::int64_t parent;
        std::string action;
    };

    struct Node {
        SystemState state;
        bool duplicated;
        std::int64_t depth;
        Path path;
    };

    struct Resolved {
        SystemState state;
        bool duplicated;
        Path path;
    };

    static Quanta min_state(const SystemState& s) {
        Quanta m = s.x.begin()->second;
        for (const auto& [_, v] : s.x) m = std::min(m, v);
        return m;
    }
    static Quanta max_state(const SystemState& s) {
        Quanta m = s.x.begin()->second;
        for (const auto& [_, v] : s.x) m = std::max(m, v);
        return m;
    }

    std::vector<std::string> unwind(const Path& leaf) const {
        std::vector<std::string> steps{leaf.action};
        for (auto p = leaf.parent; p >= 0; p = nodes_[static_cast<std::size_t>(p)].path.parent)
            steps.push_back(nodes_[static_cast<std::size_t>(p)].path.action);
        return {steps.rbegin(), steps.rend()};
    }

    void violate(const std::string& property, const std::string& detail, const Path& path) {
        if (report_.violations.size() < 64) report_.violations.push_back({property, detail, unwind(path)});
    }

    void epoch_checks(const SystemState& s, bool duplicated, std::optional<EventKind> cause, const Path& path) {
        const auto n = static_cast<Quanta>(s.agent_count());
        if (!is_connected(s.g)) violate("connectivity", "graph is disconnected", path);
        const Quanta lower = (chi_ + B_ - 1) / B_;
        const Quanta upper = duplicated ? chi_ - B_ + 2 : chi_;
        if (n < lower || n > upper)
            violate("agent-count-bounds",
                    "n=" + std::to_string(n) + " outside [" + std::to_string(lower) + ", " + std::to_string(upper) + "]",
                    path);
        if (cause == EventKind::Duplication && chi_ < n - 2 + B_)
            violate("duplication-sum-bound", "chi < n - 2 + B", path);
        if (s.total() != chi_) violate("sum-invariance", "sum drifted to " + std::to_string(s.total()), path);
    }

    // Resolves the pending thresholds of `s` (deaths first, then duplications,
    // each in id order), branching over every admissible patch.
    void resolve(const SystemState& s, bool duplicated, const Path& path, std::vector<Resolved>& out) {
        std::vector<Threshold> order;
        for (auto kind : {ThresholdKind::Zero, ThresholdKind::Upper})
            for (const auto& t : detect_thresholds(s))
                if (t.kind == kind) order.push_back(t);
        resolve_from(s, duplicated, order, 0, path, out);
    }

    void resolve_from(const SystemState& s, bool duplicated, const std::vector<Threshold>& order, std::size_t idx,
                      const Path& path, std::vector<Resolved>& out) {
        if (idx == order.size()) {
            out.push_back({s, duplicated, path});
            return;
        }
        const auto& t = order[idx];
        const auto kind = t.kind == ThresholdKind::Zero ? EventKind::Death : EventKind::Duplication;
        for (const auto& patch : enumerate_patches(s, t.agent, kind, rules_)) {
            SystemState next = s;
            Path step{path.parent, path.action + "; " + to_string(kind) + " of " + std::to_string(t.agent.value)};
            if (auto v = validate_patch(patch, next)) {
                violate("patch-validity", v->condition + ": " + v->detail, step);
                continue;
            }
            apply_patch(next, patch);
            const bool dup = duplicated || kind == EventKind::Duplication;
            epoch_checks(next, dup, kind, step);
            resolve_from(next, dup, order, idx + 1, step, out);
        }
    }

    // Registers a configuration at which nothing is pending.
    void settle(SystemState s, bool duplicated, const Path& path, std::int64_t depth) {
        auto [g, x] = rank_relabel(s.g, s.x);
        s.g = std::move(g);
        s.x = std::move(x);
        s.next_id = s.x.size();
        s.tick = 0;
        s.epoch = 0;
        auto form = canonical_form(s.g, s.x);
        const auto key = form + (duplicated ? "#after" : "#before");
        if (index_.count(key)) return;
        if (nodes_.size() >= opts_.max_configurations) {
            report_.aborted = true;
            report_.abort_reason = "state-space budget of " + std::to_string(opts_.max_configurations) +
                                   " configurations exceeded";
            return;
        }
        index_.emplace(key, nodes_.size());
        report_.reachable.insert(form);
        ++report_.configurations;
        const auto n = static_cast<Quanta>(s.agent_count());
        const bool terminal = n == 1 || detect_consensus(s);
        if (n >= 2 && detect_consensus(s)) {
            const Quanta value = s.x.begin()->second;
            report_.consensus.push_back({form, s.agent_count(), value, duplicated});
            ++(duplicated ? report_.consensus_after_duplication : report_.consensus_before_duplication);
            const bool lower_ok = duplicated ? value >= alpha_ : n <= n0_;
            if (chi_ % n != 0 || value * n != chi_ || value >= B_ || !lower_ok)
                violate("consensus-conditions", "consensus at value " + std::to_string(value) + " with n=" +
                                                    std::to_string(n), path);
        }
        nodes_.push_back({std::move(s), duplicated, depth, path});
        if (!terminal) queue_.push_back(nodes_.size() - 1);
    }

    Quanta B_, chi_, n0_, alpha_;
    RuleSet rules_;
    OracleOptions opts_;
    std::vector<Node> nodes_;
    std::unordered_map<std::string, std::size_t> index_;
    std::deque<std::size_t> queue_;
    OracleReport report_;
};

}  // namespace detail

// Explores every schedule from each start (unit delta, chi <= 12). All
// starts must share B, chi and the rule set.
inline OracleReport exhaustive_oracle(const std::vector<RunConfig>& starts, OracleOptions opts = {}) {
    if (starts.empty()) throw ConfigError("oracle needs at least one start configuration");
    const auto& first = starts.front();
    for (const auto& c : starts) {
        validate_config(c);
        if (c.delta != DeltaKind::Unit) throw ConfigError("oracle requires the unit delta policy");
        if (c.chi() > 12) throw ConfigError("oracle requires chi <= 12 (got " + std::to_string(c.chi()) + ")");
        if (c.B != first.B || c.chi() != first.chi() || !(c.rules == first.rules))
            throw ConfigError("oracle starts must share B, chi and the rule set");
    }
    // Starts are grouped by n(t0), which enters the pre-duplication consensus
    // bound; within a group the memo table is shared.
    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < starts.size(); ++i) groups[starts[i].states.size()].push_back(i);
    OracleReport report;
    for (const auto& [agents, members] : groups) {
        detail::Oracle oracle(first.B, first.chi(), agents, first.rules, opts);
        for (auto i : members) oracle.add_start(init(starts[i]), i);
        oracle.explore();
        auto part = oracle.take();
        report.configurations += part.configurations;
        report.transitions += part.transitions;
        report.consensus_before_duplication += part.consensus_before_duplication;
        report.consensus_after_duplication += part.consensus_after_duplication;
        report.consensus.insert(report.consensus.end(), part.consensus.begin(), part.consensus.end());
        report.violations.insert(report.violations.end(), part.violations.begin(), part.violations.end());
        report.reachable.insert(part.reachable.begin(), part.reachable.end());
        if (part.aborted) {
            report.aborted = true;
            report.abort_reason = part.abort_reason;
            break;
        }
    }
    return report;
}

inline OracleReport exhaustive_oracle(const RunConfig& start, OracleOptions opts = {}) {
    return exhaustive_oracle(std::vector<RunConfig>{start}, opts);
}

// Every valid start with the given B and chi on at most max_agents agents:
// each connected labeled graph on ids 1..n, each assignment of states in
// [0, B] summing to chi.
inline std::vector<RunConfig> enumerate_starts(Quanta B, Quanta chi, std::size_t max_agents, const RuleSet& rules) {
    std::vector<RunConfig> out;
    for (std::size_t n = 1; n <= max_agents; ++n) {
        if (static_cast<Quanta>(n) > chi || static_cast<Quanta>(n) * B < chi) continue;
        const auto ids = gen::id_range(n);
        std::vector<Edge> all;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) all.push_back(Edge::between(ids[i], ids[j]));
        if (all.size() > 20) throw ConfigError("enumerate_starts: too many agents");
        std::vector<std::vector<Edge>> graphs;
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << all.size()); ++mask) {
            std::vector<Edge> edges;
            for (std::size_t k = 0; k < all.size(); ++k)
                if (mask >> k & 1) edges.push_back(all[k]);
            if (is_connected(Topology::from_edges(ids, edges))) graphs.push_back(std::move(edges));
        }
        std::vector<Quanta> x(n, 0);
        std::function<void(std::size_t, Quanta)> fill = [&](std::size_t i, Quanta left) {
            if (i + 1 == n) {
                if (left > B) return;
                x[i] = left;
                for (const auto& edges : graphs) {
                    RunConfig c;
                    c.B = B;
                    c.rules = rules;
                    c.edges = edges;
                    for (std::size_t k = 0; k < n; ++k) c.states[ids[k]] = x[k];
                    out.push_back(std::move(c));
                }
                return;
            }
            for (Quanta v = 0; v <= std::min(B, left); ++v) {
                x[i] = v;
                fill(i + 1, left - v);
            }
        };
        fill(0, chi);
    }
    return out;
}

}  // namespace dissensus::analysis
