#pragma once

#include "errors.hpp"
#include "hash.hpp"

#include <algorithm>
#include <compare>
#include <cstdint>
#include <istream>
#include <iterator>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace dissensus {

// Opaque agent identifier. Ids are minted by a monotone allocator and never
// reused within a run; a duplicating agent retires its id and both children
// receive fresh ones.
struct AgentId {
    std::uint64_t value = 0;

    friend constexpr auto operator<=>(AgentId, AgentId) = default;
};

inline std::ostream& operator<<(std::ostream& os, AgentId id) { return os << id.value; }

// Resource quanta held by an agent.
using Quanta = std::int64_t;
using StateMap = std::map<AgentId, Quanta>;

// Undirected edge, stored with lo < hi. Ordering is lexicographic on (lo, hi),
// which is the canonical edge order used by schedulers and serializers.
struct Edge {
    AgentId lo;
    AgentId hi;

    static Edge between(AgentId a, AgentId b) {
        if (a == b) throw InvalidPatch("self-loop on agent " + std::to_string(a.value));
        return a < b ? Edge{a, b} : Edge{b, a};
    }

    bool touches(AgentId a) const noexcept { return lo == a || hi == a; }
    AgentId other(AgentId a) const noexcept { return a == lo ? hi : lo; }

    friend constexpr auto operator<=>(const Edge&, const Edge&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const Edge& e) {
    return os << '(' << e.lo << ',' << e.hi << ')';
}

// Dynamic undirected simple graph over stable agent ids. Symmetry of the
// adjacency sets is maintained by every mutator.
class Topology {
public:
    Topology() = default;

    static Topology from_edges(const std::vector<AgentId>& nodes, const std::vector<Edge>& edges) {
        Topology g;
        for (auto n : nodes) g.add_node(n);
        for (const auto& e : edges) {
            if (!g.add_edge(e.lo, e.hi))
                throw ConfigError("duplicate edge " + std::to_string(e.lo.value) + "-" +
                                  std::to_string(e.hi.value));
        }
        return g;
    }

    bool contains(AgentId a) const { return adj_.count(a) != 0; }
    bool empty() const noexcept { return adj_.empty(); }
    std::size_t node_count() const noexcept { return adj_.size(); }
    std::size_t edge_count() const noexcept { return edge_count_; }

    bool add_node(AgentId a) { return adj_.try_emplace(a).second; }

    // Removes the node together with every incident edge.
    void remove_node(AgentId a) {
        auto it = adj_.find(a);
        if (it == adj_.end()) return;
        for (auto nb : it->second) adj_.at(nb).erase(a);
        edge_count_ -= it->second.size();
        adj_.erase(it);
    }

    // Returns false when the edge already exists.
    bool add_edge(AgentId a, AgentId b) {
        if (a == b) throw InvalidPatch("self-loop on agent " + std::to_string(a.value));
        auto ia = adj_.find(a);
        auto ib = adj_.find(b);
        if (ia == adj_.end() || ib == adj_.end())
            throw InvalidPatch("edge " + std::to_string(a.value) + "-" + std::to_string(b.value) +
                               " references a missing agent");
        if (!ia->second.insert(b).second) return false;
        ib->second.insert(a);
        ++edge_count_;
        return true;
    }

    bool remove_edge(AgentId a, AgentId b) {
        auto ia = adj_.find(a);
        auto ib = adj_.find(b);
        if (ia == adj_.end() || ib == adj_.end() || ia->second.erase(b) == 0) return false;
        ib->second.erase(a);
        --edge_count_;
        return true;
    }

    bool has_edge(AgentId a, AgentId b) const {
        auto it = adj_.find(a);
        return it != adj_.end() && it->second.count(b) != 0;
    }
    bool has_edge(const Edge& e) const { return has_edge(e.lo, e.hi); }

    const std::set<AgentId>& neighbors(AgentId a) const {
        auto it = adj_.find(a);
        if (it == adj_.end()) throw DegenerateInput("unknown agent " + std::to_string(a.value));
        return it->second;
    }

    std::size_t degree(AgentId a) const { return neighbors(a).size(); }

    const std::map<AgentId, std::set<AgentId>>& adjacency() const noexcept { return adj_; }

    std::vector<AgentId> nodes() const {
        std::vector<AgentId> out;
        out.reserve(adj_.size());
        for (const auto& [a, _] : adj_) out.push_back(a);
        return out;
    }

    // Edges in canonical order.
    std::vector<Edge> edges() const {
        std::vector<Edge> out;
        out.reserve(edge_count_);
        for (const auto& [a, nbs] : adj_)
            for (auto it = nbs.upper_bound(a); it != nbs.end(); ++it) out.push_back({a, *it});
        return out;
    }

    bool is_symmetric() const {
        std::size_t half_degree_sum = 0;
        for (const auto& [a, nbs] : adj_) {
            half_degree_sum += nbs.size();
            for (auto b : nbs) {
                if (b == a) return false;
                auto it = adj_.find(b);
                if (it == adj_.end() || it->second.count(a) == 0) return false;
            }
        }
        return half_degree_sum == 2 * edge_count_;
    }

    friend bool operator==(const Topology& a, const Topology& b) { return a.adj_ == b.adj_; }

private:
    std::map<AgentId, std::set<AgentId>> adj_;
    std::size_t edge_count_ = 0;
};

namespace detail {

// Sorted vector of reached nodes.
template <typename Adjacent>
std::vector<AgentId> reach_from(AgentId start, Adjacent&& adjacent) {
    std::vector<AgentId> seen{start};
    std::vector<AgentId> stack{start};
    while (!stack.empty()) {
        auto a = stack.back();
        stack.pop_back();
        for (auto b : adjacent(a)) {
            auto it = std::lower_bound(seen.begin(), seen.end(), b);
            if (it != seen.end() && *it == b) continue;
            seen.insert(it, b);
            stack.push_back(b);
        }
    }
    return seen;
}

}  // namespace detail

// Empty and single-node graphs are connected.
inline bool is_connected(const Topology& g) {
    if (g.node_count() <= 1) return true;
    const auto start = g.adjacency().begin()->first;
    auto seen = detail::reach_from(start, [&](AgentId a) -> const std::set<AgentId>& { return g.neighbors(a); });
    return seen.size() == g.node_count();
}

// Connectivity of the patch subgraph (lam, eps).
inline bool is_locally_connected(const std::set<AgentId>& lam, const std::set<Edge>& eps) {
    std::map<AgentId, std::vector<AgentId>> adj;
    for (const auto& e : eps) {
        if (!lam.count(e.lo) || !lam.count(e.hi))
            throw InvalidPatch("patch edge (" + std::to_string(e.lo.value) + "," + std::to_string(e.hi.value) +
                               ") leaves the involved agent set");
        adj[e.lo].push_back(e.hi);
        adj[e.hi].push_back(e.lo);
    }
    if (lam.size() <= 1) return true;
    const std::vector<AgentId> none;
    auto seen = detail::reach_from(*lam.begin(), [&](AgentId a) -> const std::vector<AgentId>& {
        auto it = adj.find(a);
        return it == adj.end() ? none : it->second;
    });
    return seen.size() == lam.size();
}

// Shape flags; not mutually exclusive (K3 is complete and a hole, K2 is
// complete and a chain).
struct TopologyShape {
    bool complete = false;
    bool hole = false;
    bool chain = false;

    friend bool operator==(const TopologyShape&, const TopologyShape&) = default;
};

inline std::string to_string(const TopologyShape& s) {
    std::string out;
    auto add = [&](bool on, const char* name) {
        if (!on) return;
        if (!out.empty()) out += '+';
        out += name;
    };
    add(s.complete, "complete");
    add(s.hole, "hole");
    add(s.chain, "chain");
    return out.empty() ? "none" : out;
}

inline std::size_t component_count(const Topology& g);

// Same, with the component count already known.
inline TopologyShape classify(const Topology& g, std::size_t components) {
    if (g.empty()) throw DegenerateInput("cannot classify the empty graph");
    const auto n = g.node_count();
    const bool connected = components == 1;
    std::size_t deg1 = 0, deg2 = 0;
    for (const auto& [_, nbrs] : g.adjacency()) {
        const auto d = nbrs.size();
        if (d == 1) ++deg1;
        if (d == 2) ++deg2;
    }
    TopologyShape s;
    s.complete = g.edge_count() == n * (n - 1) / 2;
    // Two nodes would need a double edge to form a cycle.
    s.hole = connected && n >= 3 && deg2 == n;
    s.chain = connected && n >= 2 && deg1 == 2 && deg2 == n - 2;
    return s;
}

inline TopologyShape classify(const Topology& g) {
    if (g.empty()) throw DegenerateInput("cannot classify the empty graph");
    return classify(g, component_count(g));
}

inline std::size_t component_count(const Topology& g) {
    std::vector<AgentId> done;
    std::size_t count = 0;
    for (const auto& [a, _] : g.adjacency()) {
        if (std::binary_search(done.begin(), done.end(), a)) continue;
        auto seen = detail::reach_from(a, [&](AgentId b) -> const std::set<AgentId>& { return g.neighbors(b); });
        std::vector<AgentId> merged;
        std::merge(done.begin(), done.end(), seen.begin(), seen.end(), std::back_inserter(merged));
        done = std::move(merged);
        ++count;
    }
    return count;
}

// Cyclomatic number |E| - |V| + components; equals |E| - |V| + 1 on connected graphs.
inline std::int64_t cycle_count(const Topology& g) {
    return static_cast<std::int64_t>(g.edge_count()) - static_cast<std::int64_t>(g.node_count()) +
           static_cast<std::int64_t>(component_count(g));
}

// Order-preserving relabeling onto 0..n-1. Ids only matter to the protocol
// through their order, so two configurations that agree after relabeling
// evolve identically under deterministic rules.
inline std::pair<Topology, StateMap> rank_relabel(const Topology& g, const StateMap& x) {
    std::map<AgentId, AgentId> rank;
    std::uint64_t next = 0;
    for (auto a : g.nodes()) rank.emplace(a, AgentId{next++});
    Topology out;
    for (const auto& [_, r] : rank) out.add_node(r);
    for (const auto& e : g.edges()) out.add_edge(rank.at(e.lo), rank.at(e.hi));
    StateMap xs;
    for (const auto& [a, v] : x) xs.emplace(rank.at(a), v);
    return {std::move(out), std::move(xs)};
}

// Canonical text of a configuration after rank relabeling: "n|x0,x1,..|u-v,..".
inline std::string canonical_form(const Topology& g, const StateMap& x) {
    if (g.node_count() != x.size()) throw DegenerateInput("state domain differs from the node set");
    for (const auto& [a, _] : x)
        if (!g.contains(a)) throw DegenerateInput("state domain differs from the node set");
    const auto [rg, rx] = rank_relabel(g, x);
    std::string out = std::to_string(rg.node_count());
    out += '|';
    bool first = true;
    for (const auto& [_, v] : rx) {
        if (!first) out += ',';
        out += std::to_string(v);
        first = false;
    }
    out += '|';
    first = true;
    for (const auto& e : rg.edges()) {
        if (!first) out += ',';
        out += std::to_string(e.lo.value) + '-' + std::to_string(e.hi.value);
        first = false;
    }
    return out;
}

inline std::uint64_t canonical_key(const Topology& g, const StateMap& x) { return fnv1a(canonical_form(g, x)); }

// Edge-list format: a "nodes a b c ..." header followed by one "u v" line per
// edge with u < v, in canonical order.
inline void write_edge_list(std::ostream& os, const Topology& g) {
    os << "nodes";
    for (auto a : g.nodes()) os << ' ' << a;
    os << '\n';
    for (const auto& e : g.edges()) os << e.lo << ' ' << e.hi << '\n';
}

inline Topology read_edge_list(std::istream& is) {
    Topology g;
    std::string line;
    std::size_t lineno = 0;
    bool header = false;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        if (!header) {
            std::string tag;
            ls >> tag;
            if (tag != "nodes") throw ParseError(lineno, "expected 'nodes' header");
            std::uint64_t v;
            while (ls >> v) g.add_node(AgentId{v});
            if (!ls.eof()) throw ParseError(lineno, "malformed node id");
            header = true;
            continue;
        }
        std::uint64_t u, v;
        if (!(ls >> u >> v)) throw ParseError(lineno, "expected 'u v'");
        std::string rest;
        if (ls >> rest) throw ParseError(lineno, "trailing text after edge");
        if (u >= v) throw ParseError(lineno, "edge endpoints must satisfy u < v");
        try {
            if (!g.add_edge(AgentId{u}, AgentId{v})) throw ParseError(lineno, "duplicate edge");
        } catch (const InvalidPatch& e) {
            throw ParseError(lineno, e.what());
        }
    }
    if (!header) throw ParseError(lineno + 1, "missing 'nodes' header");
    return g;
}

}  // namespace dissensus
