#include "dissensus/engine.hpp"
#include "dissensus/generators.hpp"

#include <gtest/gtest.h>

using namespace dissensus;

namespace {

AgentId A(std::uint64_t v) { return AgentId{v}; }
Edge E(std::uint64_t a, std::uint64_t b) { return Edge::between(A(a), A(b)); }

RunConfig two_agents(Quanta a, Quanta b, Quanta B) {
    RunConfig c;
    c.B = B;
    c.states = {{A(1), a}, {A(2), b}};
    c.edges = {E(1, 2)};
    return c;
}

RunConfig on_graph(const Topology& g, std::vector<Quanta> x, Quanta B) {
    RunConfig c;
    c.B = B;
    const auto ids = g.nodes();
    for (std::size_t i = 0; i < ids.size(); ++i) c.states[ids[i]] = x[i];
    c.edges = g.edges();
    return c;
}

}  // namespace

TEST(Config, ValidExamples) {
    EXPECT_NO_THROW(validate_config(two_agents(4, 6, 8)));
    EXPECT_EQ(init(two_agents(4, 6, 8)).chi, 10);
    EXPECT_NO_THROW(validate_config(on_graph(gen::complete(3), {1, 1, 1}, 3)));
}

TEST(Config, RejectsBadInput) {
    auto c = two_agents(4, 6, 8);
    c.edges.clear();
    EXPECT_THROW(validate_config(c), ConfigError);  // disconnected

    EXPECT_THROW(validate_config(two_agents(4, 9, 8)), ConfigError);
    EXPECT_THROW(validate_config(two_agents(-1, 3, 8)), ConfigError);
    EXPECT_THROW(validate_config(two_agents(1, 0, 1)), ConfigError);
    EXPECT_THROW(validate_config(two_agents(1, 0, 8)), ConfigError);  // chi < 2

    c = two_agents(4, 6, 8);
    c.scheduler = SchedulerKind::Scripted;
    EXPECT_THROW(validate_config(c), ConfigError);

    c = two_agents(4, 6, 8);
    c.edges.push_back(E(1, 3));
    EXPECT_THROW(validate_config(c), ConfigError);

    c = two_agents(4, 6, 8);
    c.edges.push_back(E(1, 2));
    EXPECT_THROW(validate_config(c), ConfigError);

    EXPECT_THROW(validate_config(on_graph(gen::complete(3), {1, 1, 0}, 8)), ConfigError);  // n > chi
}

TEST(Config, BOneMessage) {
    try {
        validate_config(two_agents(1, 1, 1));
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("split_state requires B ≥ 2"), std::string::npos);
    }
}

TEST(Engine, SingleGossipTick) {
    Engine eng(two_agents(4, 6, 8));
    eng.step();
    EXPECT_EQ(eng.state().value(A(1)), 3);
    EXPECT_EQ(eng.state().value(A(2)), 7);
    EXPECT_EQ(eng.state().tick, 1);
    EXPECT_TRUE(eng.trace().events.empty());
}

TEST(Engine, DuplicationFiresBeforeNextGossip) {
    Engine eng(two_agents(3, 7, 8));
    eng.step();  // (2, 8)
    EXPECT_EQ(eng.state().value(A(2)), 8);
    EXPECT_EQ(eng.state().tick, 1);
    eng.step();  // critical event, no gossip
    ASSERT_EQ(eng.trace().events.size(), 1u);
    EXPECT_EQ(eng.trace().events[0].kind(), EventKind::Duplication);
    EXPECT_EQ(eng.trace().events[0].tick, 2);
    EXPECT_EQ(eng.trace().gossip.size(), 1u);
    EXPECT_EQ(eng.state().value(A(3)), 4);
    EXPECT_EQ(eng.state().value(A(4)), 4);
    EXPECT_EQ(eng.state().value(A(1)), 2);
    EXPECT_EQ(eng.state().tick, 2);
}

// Worked example: (4,6), B=8, full duplication, scripted edges.
TEST(Engine, TwinExampleReachesFiveFive) {
    auto c = two_agents(4, 6, 8);
    c.rules = parse_ruleset("star+full");
    c.scheduler = SchedulerKind::Scripted;
    c.script = {E(1, 2), E(1, 2), E(1, 3), E(1, 4)};
    const auto t = run(c);
    EXPECT_EQ(t.termination, Termination::Consensus);
    ASSERT_EQ(t.events.size(), 2u);
    EXPECT_EQ(t.events[0].kind(), EventKind::Duplication);
    EXPECT_EQ(t.events[1].kind(), EventKind::Death);
    const StateMap expected{{A(3), 5}, {A(4), 5}};
    EXPECT_EQ(t.final_state.x, expected);
    // Snapshots: t0, after duplication (2,4,4), after death (5,5).
    ASSERT_EQ(t.snapshots.size(), 3u);
    const StateMap after_dup{{A(1), 2}, {A(3), 4}, {A(4), 4}};
    EXPECT_EQ(t.snapshots[1].x, after_dup);
    EXPECT_EQ(t.snapshots[2].x, expected);
    ASSERT_EQ(t.gossip.size(), 4u);
    EXPECT_EQ(t.gossip[2].x_lo, 1);
    EXPECT_EQ(t.gossip[2].x_hi, 5);
}

TEST(Engine, DualThresholdResolvesDeathThenDuplication) {
    const auto t = run(two_agents(7, 1, 8));
    ASSERT_EQ(t.events.size(), 2u);
    EXPECT_EQ(t.events[0].kind(), EventKind::Death);
    EXPECT_EQ(t.events[0].subject(), A(2));
    EXPECT_EQ(t.events[1].kind(), EventKind::Duplication);
    EXPECT_EQ(t.events[0].tick, t.events[1].tick);
    EXPECT_EQ(t.events[0].epoch + 1, t.events[1].epoch);
    EXPECT_EQ(t.termination, Termination::Consensus);
    const StateMap expected{{A(3), 4}, {A(4), 4}};
    EXPECT_EQ(t.final_state.x, expected);
}

TEST(Engine, DeathDownToOneAgent) {
    const auto t = run(two_agents(2, 3, 8));
    EXPECT_EQ(t.termination, Termination::SingleAgent);
    EXPECT_EQ(t.final_state.x.size(), 1u);
    EXPECT_EQ(t.final_state.x.begin()->second, 5);
}

TEST(Engine, ImmediateTerminations) {
    RunConfig one;
    one.B = 8;
    one.states = {{A(1), 5}};
    const auto t = run(one);
    EXPECT_EQ(t.termination, Termination::SingleAgent);
    EXPECT_EQ(t.final_state.tick, 0);

    const auto eq = run(two_agents(3, 3, 8));
    EXPECT_EQ(eq.termination, Termination::Consensus);
    EXPECT_TRUE(eq.gossip.empty());
}

TEST(Engine, ThresholdAtStartResolvesAtTickOne) {
    const auto t = run(on_graph(gen::chain(3), {0, 3, 4}, 8));
    ASSERT_FALSE(t.events.empty());
    EXPECT_EQ(t.events[0].kind(), EventKind::Death);
    EXPECT_EQ(t.events[0].tick, 1);
}

TEST(Engine, Budgets) {
    auto c = on_graph(gen::hole(6), {5, 5, 5, 5, 5, 5}, 7);
    c.states[A(1)] = 4;
    c.states[A(2)] = 6;
    c.max_ticks = 10;
    auto t = run(c);
    EXPECT_EQ(t.termination, Termination::MaxTicks);
    EXPECT_EQ(t.final_state.tick, 10);

    c.max_ticks = 1'000'000;
    c.max_epochs = 3;
    t = run(c);
    EXPECT_EQ(t.termination, Termination::MaxEpochs);
    EXPECT_EQ(t.final_state.epoch, 3);
    EXPECT_EQ(t.events.size(), 3u);
}

TEST(Engine, ConsensusNeverBetweenEvents) {
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        auto rng = make_stream(seed, Stream::Init);
        auto c = on_graph(gen::random_connected(6, 8, rng), gen::random_states(6, 30, 7, rng), 7);
        c.seed = seed;
        c.scheduler = SchedulerKind::Random;
        c.max_ticks = 20000;
        Engine eng(c);
        while (!eng.finished()) {
            const auto before_events = eng.trace().events.size();
            eng.step();
            if (eng.finished()) break;
            if (eng.trace().events.size() == before_events) EXPECT_FALSE(detect_consensus(eng.state()));
        }
    }
}

TEST(Engine, RoundRobinSelectsEveryEdgeTwiceIn2E) {
    auto c = on_graph(gen::complete(5), {3, 5, 6, 4, 7}, 12);
    const auto t = run(c);
    std::size_t begin = 0;
    std::int64_t edges = 10;
    for (std::size_t k = 0; k <= t.events.size(); ++k) {
        const auto until = k < t.events.size() ? t.events[k].tick : t.final_state.tick + 1;
        std::vector<Edge> window;
        while (begin < t.gossip.size() && t.gossip[begin].tick < until) window.push_back(t.gossip[begin++].edge);
        for (std::size_t i = 0; i + 2 * static_cast<std::size_t>(edges) <= window.size(); ++i) {
            std::map<Edge, int> count;
            for (std::size_t j = i; j < i + 2 * static_cast<std::size_t>(edges); ++j) ++count[window[j]];
            EXPECT_EQ(count.size(), static_cast<std::size_t>(edges));
            for (const auto& [_, n] : count) EXPECT_EQ(n, 2);
        }
        if (k < t.events.size()) edges = static_cast<std::int64_t>(t.snapshots[k + 1].edges);
    }
}

TEST(Engine, Determinism) {
    for (const auto& rules : rule_catalog()) {
        auto rng = make_stream(4, Stream::Init);
        auto c = on_graph(gen::random_connected(6, 9, rng), gen::random_states(6, 30, 7, rng), 7);
        c.rules = rules;
        c.seed = 77;
        c.scheduler = SchedulerKind::Random;
        c.delta = DeltaKind::Uniform;
        c.max_ticks = 50000;
        EXPECT_EQ(run(c), run(c)) << ruleset_name(rules);
        auto d = c;
        d.seed = 78;
        EXPECT_NE(run(c).gossip, run(d).gossip);
    }
}

TEST(Engine, RecordOrderPutsEventsBeforeSameTickGossip) {
    auto c = two_agents(3, 7, 8);
    c.rules = parse_ruleset("star+full");
    const auto t = run(c);
    std::vector<std::int64_t> ticks;
    std::vector<int> kinds;
    for_each_record(t, [&](const auto& r) {
        ticks.push_back(r.tick);
        kinds.push_back(std::is_same_v<std::decay_t<decltype(r)>, GossipRecord> ? 0 : 1);
    });
    EXPECT_TRUE(std::is_sorted(ticks.begin(), ticks.end()));
    for (std::size_t i = 1; i < ticks.size(); ++i)
        if (ticks[i] == ticks[i - 1]) EXPECT_LE(kinds[i], kinds[i - 1]);
}

TEST(Engine, CustomRulesAreValidated) {
    EventRules broken = catalog_rules(RuleSet{});
    broken.death = [](const SystemState&, AgentId subject, Rng&) {
        DeathPatch p;
        p.subject = subject;
        return p;
    };
    auto c = on_graph(gen::chain(3), {1, 3, 4}, 8);
    Engine eng(c, broken);
    EXPECT_THROW(eng.run(), RuleViolation);
}

TEST(Periodicity, SmallTriangleRecurs) {
    auto c = on_graph(gen::complete(3), {1, 1, 2}, 3);
    c.detect_periodicity = true;
    c.max_epochs = 100000;
    const auto t = run(c);
    ASSERT_EQ(t.termination, Termination::Periodic);
    ASSERT_TRUE(t.period);
    EXPECT_GT(t.period->length_epochs, 0);
    EXPECT_EQ(t.period->start_epoch + t.period->length_epochs, t.final_state.epoch);
    // The recurring configuration matches after rank relabeling.
    const auto& start = t.snapshots[static_cast<std::size_t>(t.period->start_epoch)];
    const auto& end = t.snapshots.back();
    EXPECT_EQ(start.agents, end.agents);
    EXPECT_EQ(start.edges, end.edges);
    EXPECT_EQ(start.shape, end.shape);
    std::vector<Quanta> a, b;
    for (const auto& [_, v] : start.x) a.push_back(v);
    for (const auto& [_, v] : end.x) b.push_back(v);
    EXPECT_EQ(a, b);
}

TEST(Periodicity, DetectorConfirmsOnFullForm) {
    PeriodDetector d;
    const auto g = gen::chain(2);
    EXPECT_FALSE(d.observe(0, 0, g, {{A(1), 1}, {A(2), 2}}));
    EXPECT_FALSE(d.observe(1, 5, g, {{A(1), 2}, {A(2), 1}}));
    const auto p = d.observe(2, 9, gen::chain(2, 7), {{A(7), 1}, {A(8), 2}});
    ASSERT_TRUE(p);
    EXPECT_EQ(p->start_epoch, 0);
    EXPECT_EQ(p->length_epochs, 2);
    EXPECT_EQ(p->length_ticks, 9);
}
