#pragma once

#include "dissensus/engine.hpp"
#include "dissensus/generators.hpp"

namespace dissensus::fixtures {

// Random connected start: n agents, m edges, interior states summing to chi.
inline RunConfig random_start(std::uint64_t seed, std::size_t n, std::size_t m, Quanta chi, Quanta B,
                              const RuleSet& rules = {}) {
    auto rng = make_stream(seed, Stream::Init);
    const auto g = gen::random_connected(n, m, rng);
    const auto x = gen::random_states(n, chi, B, rng);
    RunConfig c;
    c.B = B;
    const auto ids = g.nodes();
    for (std::size_t i = 0; i < ids.size(); ++i) c.states[ids[i]] = x[i];
    c.edges = g.edges();
    c.rules = rules;
    c.seed = seed;
    c.scheduler = SchedulerKind::Random;
    c.max_ticks = 100000;
    return c;
}

inline RunConfig shaped_start(const Topology& g, std::uint64_t seed, Quanta chi, Quanta B, const RuleSet& rules) {
    auto rng = make_stream(seed, Stream::Init);
    const auto x = gen::random_states(g.node_count(), chi, B, rng);
    RunConfig c;
    c.B = B;
    const auto ids = g.nodes();
    for (std::size_t i = 0; i < ids.size(); ++i) c.states[ids[i]] = x[i];
    c.edges = g.edges();
    c.rules = rules;
    c.seed = seed;
    c.scheduler = SchedulerKind::Random;
    c.max_ticks = 1'000'000;
    return c;
}

}  // namespace dissensus::fixtures
