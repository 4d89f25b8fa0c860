#include "dissensus/generators.hpp"
#include "dissensus/graph.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace dissensus;

namespace {

AgentId A(std::uint64_t v) { return AgentId{v}; }

Topology make(std::size_t n, std::vector<std::pair<int, int>> edges) {
    std::vector<Edge> es;
    for (auto [u, v] : edges) es.push_back(Edge::between(A(u), A(v)));
    return Topology::from_edges(gen::id_range(n), es);
}

// Reachability by repeated squaring of the adjacency relation.
bool brute_connected(const Topology& g) {
    const auto ids = g.nodes();
    const auto n = ids.size();
    if (n <= 1) return true;
    std::vector<std::vector<bool>> r(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i) {
        r[i][i] = true;
        for (std::size_t j = 0; j < n; ++j)
            if (g.has_edge(ids[i], ids[j])) r[i][j] = true;
    }
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (r[i][k] && r[k][j]) r[i][j] = true;
    for (std::size_t j = 0; j < n; ++j)
        if (!r[0][j]) return false;
    return true;
}

}  // namespace

TEST(Edge, NormalizesEndpoints) {
    const auto e = Edge::between(A(5), A(2));
    EXPECT_EQ(e.lo, A(2));
    EXPECT_EQ(e.hi, A(5));
    EXPECT_EQ(e, Edge::between(A(2), A(5)));
    EXPECT_TRUE(e.touches(A(5)));
    EXPECT_FALSE(e.touches(A(3)));
    EXPECT_EQ(e.other(A(2)), A(5));
}

TEST(Edge, RejectsSelfLoop) { EXPECT_THROW(Edge::between(A(3), A(3)), InvalidPatch); }

TEST(Topology, AddAndRemoveKeepsSymmetry) {
    Topology g;
    for (int i = 1; i <= 4; ++i) g.add_node(A(i));
    EXPECT_TRUE(g.add_edge(A(1), A(2)));
    EXPECT_FALSE(g.add_edge(A(2), A(1)));
    EXPECT_TRUE(g.add_edge(A(2), A(3)));
    EXPECT_TRUE(g.add_edge(A(3), A(4)));
    EXPECT_EQ(g.edge_count(), 3u);
    EXPECT_TRUE(g.is_symmetric());
    g.remove_node(A(2));
    EXPECT_EQ(g.edge_count(), 1u);
    EXPECT_FALSE(g.has_edge(A(1), A(2)));
    EXPECT_TRUE(g.is_symmetric());
    EXPECT_TRUE(g.remove_edge(A(4), A(3)));
    EXPECT_FALSE(g.remove_edge(A(4), A(3)));
    EXPECT_EQ(g.edge_count(), 0u);
}

TEST(Topology, RejectsBadEdges) {
    Topology g;
    g.add_node(A(1));
    EXPECT_THROW(g.add_edge(A(1), A(1)), InvalidPatch);
    EXPECT_THROW(g.add_edge(A(1), A(9)), InvalidPatch);
    EXPECT_THROW(g.neighbors(A(9)), DegenerateInput);
    EXPECT_THROW(make(3, {{1, 2}, {2, 1}}), ConfigError);
}

TEST(Topology, EdgesAreCanonical) {
    const auto g = make(4, {{3, 4}, {1, 3}, {2, 1}});
    const std::vector<Edge> expected{{A(1), A(2)}, {A(1), A(3)}, {A(3), A(4)}};
    EXPECT_EQ(g.edges(), expected);
}

TEST(Connectivity, SmallCases) {
    EXPECT_TRUE(is_connected(Topology{}));
    EXPECT_TRUE(is_connected(make(1, {})));
    EXPECT_FALSE(is_connected(make(2, {})));
    EXPECT_TRUE(is_connected(make(3, {{1, 2}, {2, 3}})));
    EXPECT_FALSE(is_connected(make(4, {{1, 2}, {3, 4}})));
    EXPECT_EQ(component_count(make(4, {{1, 2}, {3, 4}})), 2u);
    EXPECT_EQ(component_count(make(5, {{1, 2}})), 4u);
}

TEST(Connectivity, AgreesWithBruteForceOnEveryFiveNodeGraph) {
    const auto ids = gen::id_range(5);
    std::vector<Edge> all;
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = i + 1; j < 5; ++j) all.push_back(Edge::between(ids[i], ids[j]));
    for (std::uint32_t mask = 0; mask < (1u << all.size()); ++mask) {
        std::vector<Edge> es;
        for (std::size_t k = 0; k < all.size(); ++k)
            if (mask >> k & 1) es.push_back(all[k]);
        const auto g = Topology::from_edges(ids, es);
        ASSERT_EQ(is_connected(g), brute_connected(g)) << "mask " << mask;
        ASSERT_EQ(cycle_count(g), static_cast<std::int64_t>(g.edge_count()) - 5 +
                                      static_cast<std::int64_t>(component_count(g)));
    }
}

TEST(LocalConnectivity, PatchSubgraph) {
    const std::set<AgentId> lam{A(1), A(2), A(3)};
    EXPECT_TRUE(is_locally_connected(lam, {Edge::between(A(1), A(2)), Edge::between(A(2), A(3))}));
    EXPECT_FALSE(is_locally_connected(lam, {Edge::between(A(1), A(2))}));
    EXPECT_TRUE(is_locally_connected({A(7)}, {}));
    EXPECT_THROW(is_locally_connected(lam, {Edge::between(A(1), A(4))}), InvalidPatch);
}

TEST(Classify, Shapes) {
    EXPECT_THROW(classify(Topology{}), DegenerateInput);
    const auto k1 = classify(make(1, {}));
    EXPECT_TRUE(k1.complete);
    EXPECT_FALSE(k1.chain);
    EXPECT_FALSE(k1.hole);

    const auto k2 = classify(make(2, {{1, 2}}));
    EXPECT_TRUE(k2.complete);
    EXPECT_TRUE(k2.chain);
    EXPECT_FALSE(k2.hole);

    const auto k3 = classify(gen::complete(3));
    EXPECT_TRUE(k3.complete);
    EXPECT_TRUE(k3.hole);
    EXPECT_FALSE(k3.chain);

    const auto h6 = classify(gen::hole(6));
    EXPECT_TRUE(h6.hole);
    EXPECT_FALSE(h6.chain);
    EXPECT_FALSE(h6.complete);

    const auto c6 = classify(gen::chain(6));
    EXPECT_TRUE(c6.chain);
    EXPECT_FALSE(c6.hole);
    EXPECT_EQ(to_string(c6), "chain");

    EXPECT_EQ(to_string(classify(gen::complete(4))), "complete");
    EXPECT_EQ(to_string(classify(make(4, {{1, 2}, {1, 3}, {1, 4}}))), "none");
    // Two disjoint triangles: every degree is 2 but the graph is not a hole.
    EXPECT_FALSE(classify(make(6, {{1, 2}, {2, 3}, {1, 3}, {4, 5}, {5, 6}, {4, 6}})).hole);
}

TEST(Generators, Sizes) {
    EXPECT_EQ(gen::hole(5).edge_count(), 5u);
    EXPECT_EQ(gen::chain(5).edge_count(), 4u);
    EXPECT_EQ(gen::complete(5).edge_count(), 10u);
    EXPECT_THROW(gen::hole(2), ConfigError);
    auto rng = make_stream(3, Stream::Init);
    for (int i = 0; i < 50; ++i) {
        const auto g = gen::random_connected(10, 20, rng);
        EXPECT_EQ(g.node_count(), 10u);
        EXPECT_EQ(g.edge_count(), 20u);
        EXPECT_TRUE(is_connected(g));
    }
    EXPECT_THROW(gen::random_connected(5, 3, rng), ConfigError);
    EXPECT_THROW(gen::random_connected(5, 11, rng), ConfigError);
}

TEST(Generators, RandomStatesSumAndRange) {
    auto rng = make_stream(9, Stream::Init);
    for (int i = 0; i < 100; ++i) {
        const auto x = gen::random_states(6, 30, 7, rng);
        Quanta sum = 0;
        for (auto v : x) {
            EXPECT_GE(v, 1);
            EXPECT_LE(v, 6);
            sum += v;
        }
        EXPECT_EQ(sum, 30);
    }
    EXPECT_THROW(gen::random_states(6, 37, 7, rng), ConfigError);
    EXPECT_THROW(gen::random_states(6, 5, 7, rng), ConfigError);
}

TEST(Canonical, RankRelabelingIgnoresIdGaps) {
    const auto g1 = make(3, {{1, 2}, {2, 3}});
    StateMap x1{{A(1), 2}, {A(2), 3}, {A(3), 5}};
    Topology g2;
    for (auto v : {10, 40, 70}) g2.add_node(A(v));
    g2.add_edge(A(10), A(40));
    g2.add_edge(A(40), A(70));
    StateMap x2{{A(10), 2}, {A(40), 3}, {A(70), 5}};
    EXPECT_EQ(canonical_form(g1, x1), "3|2,3,5|0-1,1-2");
    EXPECT_EQ(canonical_form(g1, x1), canonical_form(g2, x2));
    EXPECT_EQ(canonical_key(g1, x1), canonical_key(g2, x2));
    x2[A(70)] = 4;
    EXPECT_NE(canonical_form(g1, x1), canonical_form(g2, x2));
    EXPECT_THROW(canonical_form(g1, StateMap{{A(1), 1}}), DegenerateInput);
}

TEST(EdgeList, RoundTrip) {
    auto rng = make_stream(1, Stream::Init);
    const auto g = gen::random_connected(8, 12, rng);
    std::stringstream ss;
    write_edge_list(ss, g);
    EXPECT_EQ(read_edge_list(ss), g);
}

TEST(EdgeList, ParseErrorsCarryLineNumbers) {
    auto expect_line = [](const std::string& text, std::size_t line) {
        std::istringstream in(text);
        try {
            read_edge_list(in);
            FAIL() << "no error for: " << text;
        } catch (const ParseError& e) {
            EXPECT_EQ(e.line(), line) << e.what();
        }
    };
    expect_line("edges 1 2\n", 1);
    expect_line("nodes 1 2 3\n1 2\n2 x\n", 3);
    expect_line("nodes 1 2\n1 2\n1 2\n", 3);
    expect_line("nodes 1 2\n2 1\n", 2);
    expect_line("nodes 1 2\n1 5\n", 2);
}
