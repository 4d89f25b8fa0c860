#include "dissensus/generators.hpp"
#include "dissensus/trace_io.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace dissensus;

namespace {

AgentId A(std::uint64_t v) { return AgentId{v}; }

RunConfig sample_config(std::uint64_t seed, const RuleSet& rules) {
    auto rng = make_stream(seed, Stream::Init);
    const auto g = gen::random_connected(6, 8, rng);
    const auto x = gen::random_states(6, 30, 7, rng);
    RunConfig c;
    c.B = 7;
    const auto ids = g.nodes();
    for (std::size_t i = 0; i < ids.size(); ++i) c.states[ids[i]] = x[i];
    c.edges = g.edges();
    c.rules = rules;
    c.seed = seed;
    c.scheduler = SchedulerKind::Random;
    c.max_ticks = 20000;
    return c;
}

std::size_t parse_error_line(const std::string& text) {
    std::istringstream in(text);
    try {
        read_trace(in);
    } catch (const ParseError& e) {
        return e.line();
    }
    return 0;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) out.push_back(line);
    return out;
}

std::string join(const std::vector<std::string>& lines) {
    std::string out;
    for (const auto& l : lines) out += l + '\n';
    return out;
}

}  // namespace

TEST(ConfigJson, RoundTrip) {
    for (const auto& rules : rule_catalog()) {
        auto c = sample_config(3, rules);
        c.delta = DeltaKind::Uniform;
        c.max_epochs = 17;
        c.detect_periodicity = true;
        c.rules.split = SplitPolicy::fixed(5);
        EXPECT_EQ(run_config_from_json(to_json(c)), c);
    }
    auto s = sample_config(1, RuleSet{});
    s.scheduler = SchedulerKind::Scripted;
    s.script = {s.edges[0], s.edges[1]};
    EXPECT_EQ(run_config_from_json(to_json(s)), s);
}

TEST(ConfigJson, HashTracksContent) {
    const auto a = sample_config(1, RuleSet{});
    auto b = a;
    EXPECT_EQ(config_hash(a), config_hash(b));
    b.seed = 2;
    EXPECT_NE(config_hash(a), config_hash(b));
    EXPECT_EQ(config_hash(a).size(), 16u);
}

TEST(TraceIo, RoundTripIsExact) {
    for (const auto& rules : rule_catalog()) {
        const auto t = run(sample_config(5, rules));
        const auto text = trace_to_string(t);
        std::istringstream in(text);
        auto back = read_trace(in);
        EXPECT_EQ(back.config, t.config);
        EXPECT_EQ(back.gossip, t.gossip);
        EXPECT_EQ(back.events, t.events);
        EXPECT_EQ(back.termination, t.termination);
        EXPECT_EQ(back.final_state, t.final_state);
        EXPECT_EQ(trace_to_string(back), text);
    }
}

TEST(TraceIo, PeriodSurvivesRoundTrip) {
    RunConfig c;
    c.B = 3;
    c.states = {{A(1), 1}, {A(2), 1}, {A(3), 2}};
    c.edges = gen::complete(3).edges();
    c.detect_periodicity = true;
    const auto t = run(c);
    ASSERT_TRUE(t.period);
    std::istringstream in(trace_to_string(t));
    EXPECT_EQ(read_trace(in).period, t.period);
}

TEST(TraceIo, HeaderCarriesHashAndVersion) {
    const auto t = run(sample_config(2, RuleSet{}));
    const auto first = lines_of(trace_to_string(t)).front();
    const auto h = json::parse(first);
    EXPECT_EQ(h.at("format"), "dissensus-trace");
    EXPECT_EQ(h.at("version"), 1);
    EXPECT_EQ(h.at("config_hash"), config_hash(t.config));
    EXPECT_EQ(h.at("tool"), "dissensus 0.1.0");
}

TEST(TraceIo, ErrorsPointAtTheLine) {
    const auto t = run(sample_config(2, RuleSet{}));
    const auto lines = lines_of(trace_to_string(t));
    ASSERT_GT(lines.size(), 5u);

    EXPECT_EQ(parse_error_line(""), 1u);

    auto bad_header = lines;
    bad_header[0] = R"({"format":"something-else","version":1})";
    EXPECT_EQ(parse_error_line(join(bad_header)), 1u);

    auto bad_version = lines;
    bad_version[0] = R"({"format":"dissensus-trace","version":99})";
    EXPECT_EQ(parse_error_line(join(bad_version)), 1u);

    auto garbage = lines;
    garbage[3] = "{not json";
    EXPECT_EQ(parse_error_line(join(garbage)), 4u);

    auto missing_field = lines;
    missing_field[3] = R"({"type":"gossip","tick":0})";
    EXPECT_EQ(parse_error_line(join(missing_field)), 4u);

    auto unknown = lines;
    unknown[4] = R"({"type":"teleport"})";
    EXPECT_EQ(parse_error_line(join(unknown)), 5u);

    auto truncated = lines;
    truncated.pop_back();
    EXPECT_EQ(parse_error_line(join(truncated)), lines.size());

    auto trailing = lines;
    trailing.push_back(lines[2]);
    EXPECT_EQ(parse_error_line(join(trailing)), lines.size() + 1);

    auto no_init = lines;
    no_init.erase(no_init.begin() + 1);
    EXPECT_EQ(parse_error_line(join(no_init)), 2u);
}

TEST(Snapshots, RoundTrip) {
    const auto t = run(sample_config(8, parse_ruleset("clique+full")));
    std::stringstream ss;
    write_snapshots(ss, t);
    EXPECT_EQ(read_snapshots(ss), t.snapshots);
}

TEST(Snapshots, RejectWrongHeader) {
    std::istringstream in(R"({"format":"dissensus-trace","version":1})"
                          "\n");
    EXPECT_THROW(read_snapshots(in), ParseError);
}
