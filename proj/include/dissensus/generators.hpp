#pragma once

#include "errors.hpp"
#include "graph.hpp"
#include "rng.hpp"

#include <string>
#include <vector>

namespace dissensus::gen {

inline std::vector<AgentId> id_range(std::size_t n, std::uint64_t first = 1) {
    std::vector<AgentId> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back(AgentId{first + i});
    return ids;
}

inline Topology chain(std::size_t n, std::uint64_t first = 1) {
    const auto ids = id_range(n, first);
    Topology g = Topology::from_edges(ids, {});
    for (std::size_t i = 1; i < n; ++i) g.add_edge(ids[i - 1], ids[i]);
    return g;
}

inline Topology hole(std::size_t n, std::uint64_t first = 1) {
    if (n < 3) throw ConfigError("a hole needs at least 3 agents");
    Topology g = chain(n, first);
    g.add_edge(AgentId{first}, AgentId{first + n - 1});
    return g;
}

inline Topology complete(std::size_t n, std::uint64_t first = 1) {
    const auto ids = id_range(n, first);
    Topology g = Topology::from_edges(ids, {});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) g.add_edge(ids[i], ids[j]);
    return g;
}

// Random spanning tree (each node attaches to a uniformly chosen earlier node of
// a random permutation) topped up with uniformly drawn extra edges.
inline Topology random_connected(std::size_t n, std::size_t m, Rng& rng, std::uint64_t first = 1) {
    if (n == 0) throw ConfigError("random topology needs at least one agent");
    const std::size_t max_edges = n * (n - 1) / 2;
    if (m + 1 < n || m > max_edges)
        throw ConfigError("random topology: edge_count must lie in [" + std::to_string(n - 1) + ", " +
                          std::to_string(max_edges) + "]");
    auto ids = id_range(n, first);
    Topology g = Topology::from_edges(ids, {});
    auto order = ids;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[draw_below(rng, i)]);
    for (std::size_t i = 1; i < n; ++i) g.add_edge(order[i], order[draw_below(rng, i)]);
    std::vector<Edge> missing;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (!g.has_edge(ids[i], ids[j])) missing.push_back({ids[i], ids[j]});
    for (const auto& e : sample_subset(missing, m - g.edge_count(), rng)) g.add_edge(e.lo, e.hi);
    return g;
}

// Random composition of chi into n interior states, each in [1, B-1].
inline std::vector<Quanta> random_states(std::size_t n, Quanta chi, Quanta B, Rng& rng) {
    const auto count = static_cast<Quanta>(n);
    if (n == 0 || chi < count || chi > count * (B - 1))
        throw ConfigError("cannot split chi=" + std::to_string(chi) + " into " + std::to_string(n) +
                          " interior states below B=" + std::to_string(B));
    std::vector<Quanta> x(n, 1);
    std::vector<std::size_t> open(n);
    for (std::size_t i = 0; i < n; ++i) open[i] = i;
    for (Quanta left = chi - count; left > 0; --left) {
        const auto pos = draw_below(rng, open.size());
        if (++x[open[pos]] == B - 1) {
            open[pos] = open.back();
            open.pop_back();
        }
    }
    return x;
}

}  // namespace dissensus::gen
