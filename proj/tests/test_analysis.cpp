#include "dissensus/analysis/check_trace.hpp"
#include "dissensus/analysis/pie.hpp"
#include "dissensus/analysis/replay.hpp"
#include "dissensus/analysis/topology_checks.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace dissensus;
using namespace dissensus::analysis;
using dissensus::fixtures::random_start;
using dissensus::fixtures::shaped_start;

namespace {

AgentId A(std::uint64_t v) { return AgentId{v}; }

std::string first_failure(const InvariantReport& r) {
    const auto* f = r.first_failure();
    return f ? f->name : "";
}

Trace golden() {
    RunConfig c;
    c.B = 8;
    c.states = {{A(1), 4}, {A(2), 6}};
    c.edges = {Edge::between(A(1), A(2))};
    c.rules = parse_ruleset("star+full");
    c.scheduler = SchedulerKind::Scripted;
    c.script = {Edge::between(A(1), A(2)), Edge::between(A(1), A(2)), Edge::between(A(1), A(3)),
                Edge::between(A(1), A(4))};
    return run(c);
}

std::size_t first_gossip_with_delta(const Trace& t) {
    for (std::size_t i = 0; i < t.gossip.size(); ++i)
        if (t.gossip[i].delta > 0) return i;
    return t.gossip.size();
}

}  // namespace

TEST(CheckTrace, CleanRunsPassForEveryRuleSet) {
    for (const auto& rules : rule_catalog())
        for (std::uint64_t seed = 1; seed <= 4; ++seed) {
            auto c = random_start(seed, 6, 8, 30, 7, rules);
            c.max_ticks = 20000;
            const auto t = run(c);
            const auto r = check_trace(t);
            EXPECT_TRUE(r.passed()) << ruleset_name(rules) << " seed " << seed << "\n" << r.to_text();
            EXPECT_EQ(r.find("sum-invariance")->status, CheckStatus::Pass);
            EXPECT_EQ(r.find("snapshot-consistency")->status, CheckStatus::Pass);
        }
}

TEST(CheckTrace, RoundRobinIntervalBoundIsEvaluated) {
    auto c = random_start(3, 5, 6, 20, 6);
    c.scheduler = SchedulerKind::RoundRobin;
    const auto r = check_trace(run(c));
    EXPECT_TRUE(r.passed()) << r.to_text();
    EXPECT_EQ(r.find("inter-event-interval")->status, CheckStatus::Pass);
}

TEST(CheckTrace, UnexercisedChecksAreSkippedNotPassed) {
    auto c = random_start(3, 5, 6, 20, 6, parse_ruleset("clique+full"));
    const auto r = check_trace(run(c));
    EXPECT_EQ(r.find("edge-deltas")->status, CheckStatus::Skipped);
    EXPECT_EQ(r.find("inter-event-interval")->status, CheckStatus::Skipped);
}

TEST(CheckTrace, GoldenTracePasses) {
    const auto r = check_trace(golden());
    EXPECT_TRUE(r.passed()) << r.to_text();
    EXPECT_EQ(r.find("consensus-conditions")->status, CheckStatus::Pass);
}

TEST(CheckTrace, TamperedStateBreaksSumFirst) {
    auto t = golden();
    t.gossip[0].x_lo += 1;
    const auto r = check_trace(t);
    EXPECT_EQ(first_failure(r), "sum-invariance");
    EXPECT_EQ(r.find("sum-invariance")->tick, 0);
    EXPECT_EQ(r.find("local-conservation")->status, CheckStatus::Fail);
}

TEST(CheckTrace, WrongDeltaUnderUnitPolicy) {
    auto t = run(random_start(2, 5, 6, 20, 8));
    const auto i = first_gossip_with_delta(t);
    ASSERT_LT(i, t.gossip.size());
    auto& g = t.gossip[i];
    // Move one more quantum, keeping the pair sum.
    const bool lo_up = g.x_lo > g.x_hi;
    g.delta += 1;
    g.x_lo += lo_up ? 1 : -1;
    g.x_hi += lo_up ? -1 : 1;
    const auto r = check_trace(t);
    EXPECT_EQ(r.find("delta-bounds")->status, CheckStatus::Fail);
    EXPECT_EQ(r.find("delta-bounds")->tick, g.tick);
}

TEST(CheckTrace, NonEdgeExchange) {
    auto t = golden();
    t.gossip[0].edge = Edge::between(A(1), A(9));
    EXPECT_EQ(check_trace(t).find("schedule-validity")->status, CheckStatus::Fail);
}

TEST(CheckTrace, ShiftedEventTick) {
    auto t = golden();
    t.events[0].tick += 1;
    EXPECT_EQ(check_trace(t).find("tick-sequence")->status, CheckStatus::Fail);
}

TEST(CheckTrace, BadSplitInPatch) {
    auto t = golden();
    auto& d = std::get<DuplicationPatch>(t.events[0].patch);
    d.alpha = 8;
    d.beta = 0;
    const auto r = check_trace(t);
    EXPECT_EQ(r.find("patch-validity")->status, CheckStatus::Fail);
    EXPECT_NE(r.find("patch-validity")->witness.find("state-split"), std::string::npos);
    EXPECT_THROW(replay(t), RuleViolation);
}

TEST(CheckTrace, WrongTermination) {
    auto t = golden();
    t.termination = Termination::SingleAgent;
    EXPECT_EQ(first_failure(check_trace(t)), "termination");
}

TEST(CheckTrace, AlteredSnapshot) {
    auto t = golden();
    ASSERT_FALSE(t.snapshots.empty());
    t.snapshots.back().cycles += 1;
    EXPECT_EQ(first_failure(check_trace(t)), "snapshot-consistency");
    t.snapshots.pop_back();
    EXPECT_EQ(first_failure(check_trace(t)), "snapshot-consistency");
}

TEST(CheckTrace, DroppedEventBreaksFinalState) {
    auto t = golden();
    t.events.pop_back();
    EXPECT_FALSE(check_trace(t).passed());
}

TEST(Replay, MatchesEngineSnapshots) {
    for (const auto& rules : rule_catalog()) {
        const auto t = run(random_start(11, 6, 9, 30, 7, rules));
        EXPECT_EQ(replay(t), t.snapshots) << ruleset_name(rules);
    }
}

TEST(Replay, HooksFire) {
    const auto t = golden();
    std::size_t gossip = 0, thresholds = 0, epochs = 0;
    ReplayHooks h;
    h.on_gossip = [&](const SystemState&, const GossipRecord&) { ++gossip; };
    h.on_threshold = [&](const SystemState&) { ++thresholds; };
    h.on_epoch = [&](const SystemState&, const EpochSnapshot&) { ++epochs; };
    replay(t, h);
    EXPECT_EQ(gossip, t.gossip.size());
    EXPECT_EQ(epochs, t.events.size() + 1);
    EXPECT_EQ(thresholds, 2u);
}

TEST(ShapeInvariance, HoleAndChainUnderPartition) {
    const auto rules = parse_ruleset("star+partition");
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        for (auto [g, flag] : {std::pair{gen::hole(6), ShapeFlag::Hole}, std::pair{gen::chain(6), ShapeFlag::Chain}}) {
            auto c = shaped_start(g, seed, 30, 7, rules);
            c.max_epochs = 200;
            const auto r = check_topology_invariance(run(c), flag);
            EXPECT_TRUE(r.passed()) << r.to_text();
            EXPECT_EQ(r.checks.front().status, CheckStatus::Pass);
        }
    }
}

TEST(ShapeInvariance, CompleteUnderFull) {
    const auto rules = parse_ruleset("clique+full");
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto c = shaped_start(gen::complete(4), seed, 20, 10, rules);
        c.max_epochs = 200;
        const auto r = check_topology_invariance(run(c), ShapeFlag::Complete);
        EXPECT_TRUE(r.passed()) << r.to_text();
    }
}

TEST(ShapeInvariance, SkippedForTheWrongRule) {
    auto c = shaped_start(gen::hole(5), 1, 20, 7, parse_ruleset("star+full"));
    c.max_epochs = 10;
    const auto r = check_topology_invariance(run(c), ShapeFlag::Hole);
    EXPECT_EQ(r.checks.front().status, CheckStatus::Skipped);
}

TEST(ShapeInvariance, CatchesABrokenShape) {
    // Full duplication on a hole grows chords.
    auto c = shaped_start(gen::hole(6), 1, 30, 7, parse_ruleset("star+full"));
    c.max_epochs = 50;
    auto t = run(c);
    ASSERT_FALSE(t.events.empty());
    t.config.rules.duplication = DuplicationRule::Partition;  // claim the wrong rule
    std::vector<EpochSnapshot> epochs = t.snapshots;
    const auto r = check_topology_invariance(t, ShapeFlag::Hole, &epochs);
    bool any_dup = false;
    for (const auto& e : t.events) any_dup = any_dup || e.kind() == EventKind::Duplication;
    if (any_dup) {
        EXPECT_EQ(r.checks.front().status, CheckStatus::Fail);
    }
}

TEST(ShapeInvariance, BelowMinimumSizeIsNoted) {
    Trace t;
    t.config.rules = parse_ruleset("star+partition");
    EpochSnapshot big{0, 0, std::nullopt, 3, 3, 1, {true, true, false}, {}};
    EpochSnapshot small{1, 4, EventKind::Death, 2, 1, 0, {true, false, true}, {}};
    std::vector<EpochSnapshot> epochs{big, small};
    const auto r = check_topology_invariance(t, ShapeFlag::Hole, &epochs);
    EXPECT_EQ(r.checks.front().status, CheckStatus::Pass);
    EXPECT_NE(r.checks.front().witness.find("n < 3"), std::string::npos);
}

TEST(Density, StarPartitionRuns) {
    const auto rules = parse_ruleset("star+partition");
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto c = random_start(seed, 10, 20, 40, 7, rules);
        c.max_epochs = 300;
        const auto r = check_density_trend(run(c));
        EXPECT_TRUE(r.passed()) << r.to_text();
        EXPECT_EQ(r.find("density-event-deltas")->status, CheckStatus::Pass);
    }
}

TEST(Density, DetectsGrowth) {
    Trace t;
    t.config.rules = parse_ruleset("star+partition");
    auto snap = [](std::int64_t epoch, std::optional<EventKind> cause, std::size_t n, std::size_t e, std::int64_t c) {
        return EpochSnapshot{epoch, epoch, cause, n, e, c, {}, {}};
    };
    std::vector<EpochSnapshot> epochs{snap(0, std::nullopt, 4, 5, 2), snap(1, EventKind::Duplication, 5, 6, 2),
                                      snap(2, EventKind::Death, 4, 4, 1), snap(3, EventKind::Duplication, 5, 7, 3)};
    const auto r = check_density_trend(t, 1, &epochs);
    EXPECT_EQ(r.find("density-edges")->status, CheckStatus::Fail);
    EXPECT_EQ(r.find("density-cycles")->status, CheckStatus::Fail);
    EXPECT_EQ(r.find("density-event-deltas")->status, CheckStatus::Fail);
}

TEST(Density, SkippedForOtherRules) {
    Trace t;
    t.config.rules = parse_ruleset("clique+partition");
    std::vector<EpochSnapshot> epochs{EpochSnapshot{}};
    const auto r = check_density_trend(t, std::nullopt, &epochs);
    for (const auto& c : r.checks) EXPECT_EQ(c.status, CheckStatus::Skipped);
}

TEST(Pie, FramesAreExact) {
    const auto t = run(random_start(4, 6, 8, 30, 7, parse_ruleset("star+partition")));
    const auto frames = export_pie_frames(t);
    ASSERT_FALSE(frames.empty());
    for (const auto& f : frames) {
        EXPECT_EQ(f.total_degrees(), (Rational{360, 1}));
        for (const auto& s : f.slices) EXPECT_EQ(s.denominator, 30);
    }
    EXPECT_EQ(frames.front().phase, FramePhase::Epoch);
    EXPECT_EQ(frames.size(), t.snapshots.size() + [&] {
        std::set<std::int64_t> ticks;
        for (const auto& e : t.events) ticks.insert(e.tick);
        return ticks.size();
    }());
}

TEST(Pie, ThresholdFrameShowsTheDyingAgent) {
    const auto frames = export_pie_frames(golden());
    bool zero_slice = false;
    for (const auto& f : frames)
        if (f.phase == FramePhase::Threshold)
            for (const auto& s : f.slices) zero_slice = zero_slice || s.numerator == 0;
    EXPECT_TRUE(zero_slice);
}

TEST(Pie, PerTickFrames) {
    const auto t = golden();
    EXPECT_EQ(export_pie_frames(t, true).size(), export_pie_frames(t).size() + t.gossip.size());
}

TEST(Pie, CsvAndSvg) {
    const auto frames = export_pie_frames(golden());
    std::ostringstream os;
    write_frames_csv(os, frames, "hdr");
    const auto csv = os.str();
    EXPECT_EQ(csv.rfind("# hdr\nframe,epoch,tick,phase,agent,numerator,denominator,degrees\n", 0), 0u);
    EXPECT_NE(csv.find("180.000000"), std::string::npos);
    const auto svg = frame_svg(frames.back());
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_NE(svg.find("agent 3: 5/10"), std::string::npos);
}

TEST(Rational, Reduces) {
    EXPECT_EQ(Rational::of(360 * 4, 10), (Rational{144, 1}));
    EXPECT_EQ(Rational::of(1, 3) + Rational::of(1, 6), (Rational{1, 2}));
    EXPECT_EQ(Rational::of(0, 5), (Rational{0, 1}));
}
