#pragma once

#include "errors.hpp"
#include "graph.hpp"
#include "protocol.hpp"
#include "rng.hpp"

#include <algorithm>
#include <functional>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace dissensus {

enum class EventKind { Death, Duplication };

inline const char* to_string(EventKind k) { return k == EventKind::Death ? "death" : "duplication"; }

// Rewrite for the death of `subject`. Each surviving neighbor j inherits the
// links inherited[j] to other former neighbors.
struct DeathPatch {
    AgentId subject;
    std::set<AgentId> lam;                           // former neighborhood
    std::map<AgentId, std::set<AgentId>> inherited;  // per-neighbor inheritance sets
    std::set<Edge> eps;                              // edges added by the event

    friend bool operator==(const DeathPatch&, const DeathPatch&) = default;
};

// Rewrite for the duplication of `subject` into child1 (state alpha) and
// child2 (state beta).
struct DuplicationPatch {
    AgentId subject;
    AgentId child1;
    AgentId child2;
    std::set<AgentId> lam;  // former neighborhood plus both children
    std::set<AgentId> child1_neighbors;
    std::set<AgentId> child2_neighbors;
    std::set<Edge> eps;
    Quanta alpha = 0;
    Quanta beta = 0;

    friend bool operator==(const DuplicationPatch&, const DuplicationPatch&) = default;
};

using TopologyPatch = std::variant<DeathPatch, DuplicationPatch>;

inline EventKind kind_of(const TopologyPatch& p) {
    return std::holds_alternative<DeathPatch>(p) ? EventKind::Death : EventKind::Duplication;
}

inline AgentId subject_of(const TopologyPatch& p) {
    return std::visit([](const auto& q) { return q.subject; }, p);
}

struct SplitPolicy {
    enum class Kind { Half, Fixed };
    Kind kind = Kind::Half;
    Quanta alpha = 0;  // used by Fixed

    static SplitPolicy half() { return {}; }
    static SplitPolicy fixed(Quanta alpha) { return {Kind::Fixed, alpha}; }

    friend bool operator==(const SplitPolicy&, const SplitPolicy&) = default;
};

struct Split {
    Quanta alpha = 0;
    Quanta beta = 0;

    friend bool operator==(const Split&, const Split&) = default;
};

// State handed to the two children; alpha >= beta > 0 and alpha + beta = B.
inline Split split_state(Quanta B, SplitPolicy policy) {
    if (B < 2) throw ConfigError("split_state requires B ≥ 2 (got B=" + std::to_string(B) + ")");
    if (policy.kind == SplitPolicy::Kind::Half) return {B - B / 2, B / 2};
    const Quanta alpha = policy.alpha;
    if (alpha >= B || alpha < B - alpha)
        throw ConfigError("split alpha=" + std::to_string(alpha) + " must satisfy B/2 <= alpha < B (B=" +
                          std::to_string(B) + ")");
    return {alpha, B - alpha};
}

inline std::set<Edge> inherited_edges(const std::map<AgentId, std::set<AgentId>>& inherited) {
    std::set<Edge> eps;
    for (const auto& [j, set] : inherited)
        for (auto i : set) eps.insert(Edge::between(j, i));
    return eps;
}

inline std::set<Edge> child_edges(AgentId c1, const std::set<AgentId>& n1, AgentId c2, const std::set<AgentId>& n2) {
    std::set<Edge> eps;
    for (auto i : n1) eps.insert(Edge::between(c1, i));
    for (auto i : n2) eps.insert(Edge::between(c2, i));
    return eps;
}

// Every connection of the dead agent goes to one neighbor j*.
inline DeathPatch death_star_rule(AgentId subject, const std::set<AgentId>& neighbors, AgentId jstar) {
    if (neighbors.empty()) throw DegenerateInput("isolated agent cannot die through a patch");
    if (!neighbors.count(jstar)) throw InvalidPatch("j* is not a neighbor of the dying agent");
    DeathPatch p{subject, neighbors, {}, {}};
    for (auto j : neighbors) {
        if (j == jstar) {
            auto rest = neighbors;
            rest.erase(jstar);
            p.inherited[j] = std::move(rest);
        } else {
            p.inherited[j] = {jstar};
        }
    }
    p.eps = inherited_edges(p.inherited);
    return p;
}

// Neighbors of the dead agent become pairwise adjacent.
inline DeathPatch death_clique_rule(AgentId subject, const std::set<AgentId>& neighbors) {
    if (neighbors.empty()) throw DegenerateInput("isolated agent cannot die through a patch");
    DeathPatch p{subject, neighbors, {}, {}};
    for (auto j : neighbors) {
        auto rest = neighbors;
        rest.erase(j);
        p.inherited[j] = std::move(rest);
    }
    p.eps = inherited_edges(p.inherited);
    return p;
}

// Children split the parent's neighborhood: child1 takes `pick`, child2 the
// rest, and the two children are linked.
inline DuplicationPatch dup_partition_rule(AgentId subject, const std::set<AgentId>& neighbors,
                                           const std::set<AgentId>& pick, std::pair<AgentId, AgentId> children,
                                           Split split) {
    const auto [c1, c2] = children;
    DuplicationPatch p{subject, c1, c2, neighbors, {}, {}, {}, split.alpha, split.beta};
    p.lam.insert(c1);
    p.lam.insert(c2);
    p.child1_neighbors = pick;
    p.child1_neighbors.insert(c2);
    std::set_difference(neighbors.begin(), neighbors.end(), pick.begin(), pick.end(),
                        std::inserter(p.child2_neighbors, p.child2_neighbors.end()));
    p.child2_neighbors.insert(c1);
    p.eps = child_edges(c1, p.child1_neighbors, c2, p.child2_neighbors);
    return p;
}

// pick is a uniformly random subset of floor(|N|/2) neighbors.
inline DuplicationPatch dup_partition_rule(AgentId subject, const std::set<AgentId>& neighbors,
                                           std::pair<AgentId, AgentId> children, Split split, Rng& rng) {
    const std::vector<AgentId> pool(neighbors.begin(), neighbors.end());
    const auto drawn = sample_subset(pool, pool.size() / 2, rng);
    return dup_partition_rule(subject, neighbors, std::set<AgentId>(drawn.begin(), drawn.end()), children, split);
}

// Both children inherit every parent link and connect to each other.
inline DuplicationPatch dup_full_rule(AgentId subject, const std::set<AgentId>& neighbors,
                                      std::pair<AgentId, AgentId> children, Split split) {
    const auto [c1, c2] = children;
    DuplicationPatch p{subject, c1, c2, neighbors, neighbors, neighbors, {}, split.alpha, split.beta};
    p.lam.insert(c1);
    p.lam.insert(c2);
    p.child1_neighbors.insert(c2);
    p.child2_neighbors.insert(c1);
    p.eps = child_edges(c1, p.child1_neighbors, c2, p.child2_neighbors);
    return p;
}

struct Violation {
    std::string condition;
    std::string detail;
};

namespace detail {

inline bool subset_of(const std::set<AgentId>& a, const std::set<AgentId>& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

inline std::set<AgentId> set_union(const std::set<AgentId>& a, const std::set<AgentId>& b) {
    std::set<AgentId> out = a;
    out.insert(b.begin(), b.end());
    return out;
}

inline std::optional<Violation> check_local_connectivity(const std::set<AgentId>& lam, const std::set<Edge>& eps) {
    try {
        if (!is_locally_connected(lam, eps)) return Violation{"local-connectivity", "(lam, eps) is disconnected"};
    } catch (const InvalidPatch& e) {
        return Violation{"edge-set", e.what()};
    }
    return std::nullopt;
}

inline std::optional<Violation> validate_death(const DeathPatch& p, const SystemState& s) {
    if (!s.g.contains(p.subject)) return Violation{"subject-present", "subject is not a live agent"};
    const auto& nbs = s.g.neighbors(p.subject);
    if (p.lam != nbs) return Violation{"involved-set", "lam must equal the dying agent's neighborhood"};
    std::set<AgentId> keys;
    for (const auto& [j, _] : p.inherited) keys.insert(j);
    if (keys != p.lam) return Violation{"inheritance-domain", "one inheritance set per former neighbor required"};
    std::set<AgentId> cover;
    for (const auto& [j, set] : p.inherited) {
        if (set.count(j) || !subset_of(set, p.lam))
            return Violation{"inheritance-domain",
                             "agent " + std::to_string(j.value) + " inherits outside N \\ {j}"};
        cover.insert(set.begin(), set.end());
    }
    if (p.eps != inherited_edges(p.inherited))
        return Violation{"edge-set", "eps does not match the inheritance sets"};
    // Vacuous for a single neighbor.
    if (p.lam.size() >= 2 && cover != p.lam)
        return Violation{"death-cover", "some neighbor of the dead agent inherits no link"};
    return check_local_connectivity(p.lam, p.eps);
}

inline std::optional<Violation> validate_duplication(const DuplicationPatch& p, const SystemState& s) {
    if (!s.g.contains(p.subject)) return Violation{"subject-present", "subject is not a live agent"};
    if (!(p.child1 < p.child2) || s.g.contains(p.child1) || s.g.contains(p.child2) ||
        p.child1.value < s.next_id)
        return Violation{"fresh-children", "children must be two unused ids, child1 < child2"};
    const auto& nbs = s.g.neighbors(p.subject);
    auto expected_lam = nbs;
    expected_lam.insert(p.child1);
    expected_lam.insert(p.child2);
    if (p.lam != expected_lam) return Violation{"involved-set", "lam must equal N plus both children"};
    auto dom1 = p.lam, dom2 = p.lam;
    dom1.erase(p.child1);
    dom2.erase(p.child2);
    if (!subset_of(p.child1_neighbors, dom1) || !subset_of(p.child2_neighbors, dom2))
        return Violation{"inheritance-domain", "child neighbor sets must lie in lam minus the child itself"};
    if (p.eps != child_edges(p.child1, p.child1_neighbors, p.child2, p.child2_neighbors))
        return Violation{"edge-set", "eps does not match the children's neighbor sets"};
    const auto both = set_union(p.child1_neighbors, p.child2_neighbors);
    bool shared = false;
    for (auto a : p.child1_neighbors)
        if (p.child2_neighbors.count(a)) shared = true;
    if (!(both == p.lam || (both == nbs && shared)))
        return Violation{"duplication-cover",
                         "children must cover lam, or cover N and share a neighbor"};
    if (!(p.alpha >= p.beta && p.beta > 0 && p.alpha + p.beta == s.B))
        return Violation{"state-split", "need alpha >= beta > 0 and alpha + beta = B (alpha=" +
                                            std::to_string(p.alpha) + ", beta=" + std::to_string(p.beta) +
                                            ", B=" + std::to_string(s.B) + ")"};
    return check_local_connectivity(p.lam, p.eps);
}

}  // namespace detail

// First violated patch condition, or nullopt. Never mutates.
inline std::optional<Violation> validate_patch(const TopologyPatch& p, const SystemState& s) {
    if (const auto* d = std::get_if<DeathPatch>(&p)) return detail::validate_death(*d, s);
    return detail::validate_duplication(std::get<DuplicationPatch>(p), s);
}

struct CriticalEventRecord {
    std::int64_t epoch = 0;  // epoch index after the event
    std::int64_t tick = 0;   // critical time
    TopologyPatch patch;

    EventKind kind() const { return kind_of(patch); }
    AgentId subject() const { return subject_of(patch); }

    friend bool operator==(const CriticalEventRecord&, const CriticalEventRecord&) = default;
};

namespace detail {

inline void require_valid(const TopologyPatch& p, const SystemState& s) {
    if (auto v = validate_patch(p, s)) throw RuleViolation(v->condition + ": " + v->detail);
}

}  // namespace detail

// Removes the dead agent and its links, adds the inherited edges. Survivor
// states are untouched.
inline CriticalEventRecord apply_death(SystemState& s, const DeathPatch& p) {
    if (s.value(p.subject) != 0) throw RuleViolation("death requires the subject's state to be 0");
    detail::require_valid(p, s);
    s.g.remove_node(p.subject);
    s.x.erase(p.subject);
    for (const auto& e : p.eps) s.g.add_edge(e.lo, e.hi);
    ++s.epoch;
    return {s.epoch, s.tick, p};
}

// Retires the parent, inserts both children with states alpha and beta.
inline CriticalEventRecord apply_duplication(SystemState& s, const DuplicationPatch& p) {
    if (s.value(p.subject) != s.B) throw RuleViolation("duplication requires the subject's state to be B");
    detail::require_valid(p, s);
    s.g.remove_node(p.subject);
    s.x.erase(p.subject);
    s.g.add_node(p.child1);
    s.g.add_node(p.child2);
    for (const auto& e : p.eps) s.g.add_edge(e.lo, e.hi);
    s.x[p.child1] = p.alpha;
    s.x[p.child2] = p.beta;
    s.next_id = std::max(s.next_id, p.child2.value + 1);
    ++s.epoch;
    return {s.epoch, s.tick, p};
}

inline CriticalEventRecord apply_patch(SystemState& s, const TopologyPatch& p) {
    if (const auto* d = std::get_if<DeathPatch>(&p)) return apply_death(s, *d);
    return apply_duplication(s, std::get<DuplicationPatch>(p));
}

// ---------------------------------------------------------------------------
// Rule catalog

enum class DeathRule { Star, Clique };
enum class JStarPolicy { MaxState, Random };
enum class DuplicationRule { Partition, Full };

struct RuleSet {
    DeathRule death = DeathRule::Star;
    JStarPolicy jstar = JStarPolicy::MaxState;
    DuplicationRule duplication = DuplicationRule::Partition;
    SplitPolicy split = SplitPolicy::half();

    friend bool operator==(const RuleSet&, const RuleSet&) = default;
};

// "star+partition", "star-random+full", "clique+full", ...
inline std::string ruleset_name(const RuleSet& r) {
    std::string d = r.death == DeathRule::Clique ? "clique" : (r.jstar == JStarPolicy::Random ? "star-random" : "star");
    return d + "+" + (r.duplication == DuplicationRule::Partition ? "partition" : "full");
}

inline RuleSet parse_ruleset(const std::string& name) {
    const auto plus = name.find('+');
    if (plus == std::string::npos) throw ConfigError("rule set '" + name + "' must look like <death>+<duplication>");
    const auto death = name.substr(0, plus);
    const auto dup = name.substr(plus + 1);
    RuleSet r;
    if (death == "star") r.death = DeathRule::Star, r.jstar = JStarPolicy::MaxState;
    else if (death == "star-random") r.death = DeathRule::Star, r.jstar = JStarPolicy::Random;
    else if (death == "clique") r.death = DeathRule::Clique;
    else throw ConfigError("unknown death rule '" + death + "' (star, star-random, clique)");
    if (dup == "partition") r.duplication = DuplicationRule::Partition;
    else if (dup == "full") r.duplication = DuplicationRule::Full;
    else throw ConfigError("unknown duplication rule '" + dup + "' (partition, full)");
    return r;
}

// Every named rule combination.
inline std::vector<RuleSet> rule_catalog() {
    std::vector<RuleSet> out;
    for (auto name : {"star+partition", "star-random+partition", "clique+partition", "star+full",
                      "star-random+full", "clique+full"})
        out.push_back(parse_ruleset(name));
    return out;
}

// Neighbor with the largest state, ties to the smallest id.
inline AgentId max_state_neighbor(const SystemState& s, const std::set<AgentId>& neighbors) {
    AgentId best = *neighbors.begin();
    for (auto j : neighbors)
        if (s.value(j) > s.value(best)) best = j;
    return best;
}

// Randomness for one critical event, keyed by (seed, epoch) so that replay
// is exact and earlier edits do not reshuffle unrelated later draws.
inline Rng event_stream(std::uint64_t seed, std::int64_t epoch) {
    return make_stream(seed, Stream::Event, static_cast<std::uint64_t>(epoch));
}

// Rule hooks. Any function producing a patch is admissible; the engine
// validates every patch before applying it.
struct EventRules {
    std::function<DeathPatch(const SystemState&, AgentId, Rng&)> death;
    std::function<DuplicationPatch(const SystemState&, AgentId, Rng&)> duplication;
};

inline EventRules catalog_rules(const RuleSet& r) {
    EventRules rules;
    if (r.death == DeathRule::Clique) {
        rules.death = [](const SystemState& s, AgentId subject, Rng&) {
            return death_clique_rule(subject, s.g.neighbors(subject));
        };
    } else if (r.jstar == JStarPolicy::MaxState) {
        rules.death = [](const SystemState& s, AgentId subject, Rng&) {
            const auto& nbs = s.g.neighbors(subject);
            return death_star_rule(subject, nbs, max_state_neighbor(s, nbs));
        };
    } else {
        rules.death = [](const SystemState& s, AgentId subject, Rng& rng) {
            const auto& nbs = s.g.neighbors(subject);
            auto it = nbs.begin();
            std::advance(it, static_cast<std::ptrdiff_t>(draw_below(rng, nbs.size())));
            return death_star_rule(subject, nbs, *it);
        };
    }
    const auto policy = r.split;
    if (r.duplication == DuplicationRule::Partition) {
        rules.duplication = [policy](const SystemState& s, AgentId subject, Rng& rng) {
            return dup_partition_rule(subject, s.g.neighbors(subject), s.fresh_ids(), split_state(s.B, policy), rng);
        };
    } else {
        rules.duplication = [policy](const SystemState& s, AgentId subject, Rng&) {
            return dup_full_rule(subject, s.g.neighbors(subject), s.fresh_ids(), split_state(s.B, policy));
        };
    }
    return rules;
}

namespace detail {

inline void k_subsets(const std::vector<AgentId>& pool, std::size_t k, std::size_t from, std::set<AgentId>& cur,
                      std::vector<std::set<AgentId>>& out) {
    if (cur.size() == k) {
        out.push_back(cur);
        return;
    }
    for (std::size_t i = from; i < pool.size(); ++i) {
        cur.insert(pool[i]);
        k_subsets(pool, k, i + 1, cur, out);
        cur.erase(pool[i]);
    }
}

}  // namespace detail

// Every patch a catalog rule could produce for this event, treating random
// choices (j*, pick) as nondeterministic branches.
inline std::vector<TopologyPatch> enumerate_patches(const SystemState& s, AgentId subject, EventKind kind,
                                                    const RuleSet& r) {
    std::vector<TopologyPatch> out;
    const auto& nbs = s.g.neighbors(subject);
    if (kind == EventKind::Death) {
        if (nbs.empty()) return out;
        if (r.death == DeathRule::Clique) out.emplace_back(death_clique_rule(subject, nbs));
        else if (r.jstar == JStarPolicy::MaxState)
            out.emplace_back(death_star_rule(subject, nbs, max_state_neighbor(s, nbs)));
        else
            for (auto j : nbs) out.emplace_back(death_star_rule(subject, nbs, j));
        return out;
    }
    const auto split = split_state(s.B, r.split);
    if (r.duplication == DuplicationRule::Full) {
        out.emplace_back(dup_full_rule(subject, nbs, s.fresh_ids(), split));
        return out;
    }
    const std::vector<AgentId> pool(nbs.begin(), nbs.end());
    std::vector<std::set<AgentId>> picks;
    std::set<AgentId> cur;
    detail::k_subsets(pool, pool.size() / 2, 0, cur, picks);
    for (const auto& pick : picks) out.emplace_back(dup_partition_rule(subject, nbs, pick, s.fresh_ids(), split));
    return out;
}

}  // namespace dissensus
