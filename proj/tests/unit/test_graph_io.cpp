#include <random>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "metakg/error.hpp"
#include "metakg/graph_io.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace metakg;

namespace {

MetaphorGraph small_graph() {
    std::vector<ConceptPair> pairs{{"Time", "River", "d1"}, {"anger", "storm", "d2"}, {"time", "flow", "d1"}};
    return build_graph(pairs, {}).graph;
}

std::string replace_first(std::string s, const std::string& from, const std::string& to) {
    s.replace(s.find(from), from.size(), to);
    return s;
}

}  // namespace

TEST(GraphIo, EscapesRoundTrip) {
    for (std::string s : {"plain", "two words", "back\\slash", "line\nbreak", " lead", "\\s"}) {
        EXPECT_EQ(unescape_label(escape_label(s)), s);
        EXPECT_EQ(escape_label(s).find(' '), std::string::npos);
    }
    EXPECT_THROW(unescape_label("bad\\"), InputError);
    EXPECT_THROW(unescape_label("bad\\q"), InputError);
}

TEST(GraphIo, SerializedFormat) {
    const std::string text = serialize_graph(small_graph());
    std::istringstream in(text);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header.rfind("MKG1 5 4 ", 0), 0u);
    EXPECT_NE(text.find("\nN 0 1 1 anger\n"), std::string::npos);
    EXPECT_NE(text.find("\nE 0 3 m 1\n"), std::string::npos);
    EXPECT_NE(text.find("\nE 1 2 c 1\n"), std::string::npos);
}

TEST(GraphIo, RoundTripPreservesEverything) {
    std::mt19937_64 rng(77);
    for (int round = 0; round < 30; ++round) {
        auto g = oracle::random_graph(rng, 100, 300);
        std::istringstream in(serialize_graph(g));
        auto back = read_graph(in);
        ASSERT_EQ(back.node_count(), g.node_count());
        EXPECT_EQ(back.edges(), g.edges());
        for (std::size_t i = 0; i < g.node_count(); ++i) {
            EXPECT_EQ(back.nodes()[i].label, g.nodes()[i].label);
            EXPECT_EQ(back.nodes()[i].freq, g.nodes()[i].freq);
            EXPECT_EQ(back.nodes()[i].roles, g.nodes()[i].roles);
        }
        EXPECT_EQ(serialize_graph(back), serialize_graph(g));
    }
}

TEST(GraphIo, FileRoundTrip) {
    testutil::TempDir dir;
    auto g = small_graph();
    save_graph(dir / "g.mkg", g);
    auto back = load_graph(dir / "g.mkg");
    EXPECT_EQ(serialize_graph(back), serialize_graph(g));
    EXPECT_FALSE(back.meta().digest.empty());
    EXPECT_TRUE(back.meta().cooccur);
}

TEST(GraphIo, TamperedBodyFailsDigest) {
    const std::string text = serialize_graph(small_graph());
    std::istringstream in(replace_first(text, "E 0 3 m 1", "E 0 3 m 2"));
    EXPECT_THROW(read_graph(in), InputError);
}

TEST(GraphIo, CountMismatchIsRejected) {
    const std::string text = serialize_graph(small_graph());
    std::istringstream in(replace_first(text, "MKG1 5 4", "MKG1 5 5"));
    EXPECT_THROW(read_graph(in), InputError);
}

TEST(GraphIo, MalformedInputs) {
    for (std::string bad : {"", "XKG1 0 0 x\n", "MKG1 0 0\n", "MKG1 1 0 x\nQ 0 1 1 a\n"}) {
        std::istringstream in(bad);
        EXPECT_THROW(read_graph(in), InputError) << bad;
    }
    EXPECT_THROW(load_graph("/nonexistent/graph.mkg"), InputError);
}

TEST(GraphIo, InvariantViolationsSurfaceAsInputErrors) {
    // Valid digest over an edge with u > v.
    std::vector<ConceptNode> nodes{{0, "a", {}, 1, 1}, {1, "b", {}, 2, 1}};
    std::vector<Edge> edges{{1, 0, EdgeKind::mapping, 1}};
    const std::string text =
        "MKG1 2 1 " + graph_digest(nodes, edges) + "\nN 0 1 1 a\nN 1 1 2 b\nE 1 0 m 1\n";
    std::istringstream in(text);
    EXPECT_THROW(read_graph(in), InputError);
}

TEST(GraphIo, RetrievalJsonRoundTrip) {
    auto g = small_graph();
    std::vector<std::string> kws{"time", "ocean"};
    auto r = query_common_connection(g, kws, {});
    nlohmann::json j = r;
    EXPECT_EQ(j.get<RetrievalResult>(), r);
    EXPECT_EQ(j["unmatched"], nlohmann::json::array({"ocean"}));
}
