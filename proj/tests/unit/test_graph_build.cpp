#include <algorithm>
#include <random>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <gtest/gtest.h>

#include "metakg/error.hpp"
#include "metakg/graph.hpp"
#include "metakg/graph_io.hpp"
#include "metakg/normalize.hpp"

using namespace metakg;

namespace {

std::vector<ConceptPair> twenty_pairs() {
    return {
        {"Time", "river", "d1"},       {"time", "River ", "d2"},       {"river", "time", "d3"},
        {"Storm", "anger", "d1"},      {"“Storm!”", "rage", "d4"},    {"cage", "marriage", "d5"},
        {"bird", "freedom", "d5"},     {"Bird", "soul", "d6"},         {"road", "life", "d7"},
        {"life", "journey", "d7"},     {"mask", "lie", "d8"},          {"Mask", "Mask", "d8"},
        {"clock", "death", "d9"},      {"red rose", "love", "d10"},    {"rose", "love", "d10"},
        {"fire", "passion", "d11"},    {"ice", "indifference", "d11"}, {"  ", "void", "d12"},
        {"light", "hope", "d12"},      {"sea", "eternity", "d12"},
    };
}

struct PairKey {
    std::string a, b;
    bool operator==(const PairKey&) const = default;
};
struct PairHash {
    std::size_t operator()(const PairKey& k) const { return std::hash<std::string>()(k.a + '\x1f' + k.b); }
};
PairKey unordered(const std::string& x, const std::string& y) { return x < y ? PairKey{x, y} : PairKey{y, x}; }

/// Hash-set construction straight from the build rules.
struct SetOracle {
    std::unordered_set<std::string> labels;
    std::unordered_map<PairKey, std::uint64_t, PairHash> mapping;
    std::unordered_map<PairKey, std::uint64_t, PairHash> cooccur;
    std::size_t rejected = 0;

    explicit SetOracle(const std::vector<ConceptPair>& pairs, bool with_cooccur) {
        std::unordered_map<std::string, std::unordered_set<std::string>> docs;
        for (const auto& p : pairs) {
            auto s = normalize_label(p.source);
            auto t = normalize_label(p.target);
            if (s.empty() || t.empty() || s == t) {
                ++rejected;
                continue;
            }
            labels.insert(s);
            labels.insert(t);
            ++mapping[unordered(s, t)];
            docs[p.doc_id].insert(s);
            docs[p.doc_id].insert(t);
        }
        if (!with_cooccur) return;
        for (const auto& [doc, members] : docs) {
            std::vector<std::string> m(members.begin(), members.end());
            for (std::size_t i = 0; i < m.size(); ++i)
                for (std::size_t j = i + 1; j < m.size(); ++j) {
                    auto k = unordered(m[i], m[j]);
                    if (!mapping.count(k)) ++cooccur[k];
                }
        }
    }
};

std::size_t count_kind(const MetaphorGraph& g, EdgeKind k) {
    return static_cast<std::size_t>(
        std::count_if(g.edges().begin(), g.edges().end(), [&](const Edge& e) { return e.kind == k; }));
}

}  // namespace

TEST(BuildGraph, SinglePair) {
    std::vector<ConceptPair> pairs{{"Time", "river", "d1"}};
    auto r = build_graph(pairs, {});
    const auto& g = r.graph;
    ASSERT_EQ(g.node_count(), 2u);
    EXPECT_EQ(g.node(0).label, "river");
    EXPECT_EQ(g.node(1).label, "time");
    ASSERT_EQ(g.edge_count(), 1u);
    EXPECT_EQ(g.edges()[0], (Edge{0, 1, EdgeKind::mapping, 1}));
    EXPECT_EQ(g.node(1).roles, kRoleSource);
    EXPECT_EQ(g.node(0).roles, kRoleTarget);
    EXPECT_EQ(g.node(1).raw_labels, (std::set<std::string>{"Time"}));
}

TEST(BuildGraph, DuplicatesMergeByNormalization) {
    std::vector<ConceptPair> pairs{{"time", "river", "d1"}, {"Time", "river", "d2"}};
    auto g = build_graph(pairs, {}).graph;
    EXPECT_EQ(g.node_count(), 2u);
    ASSERT_EQ(count_kind(g, EdgeKind::mapping), 1u);
    EXPECT_EQ(g.edges()[0].weight, 2u);
    EXPECT_EQ(g.node(*g.find("time")).freq, 2u);
    EXPECT_EQ(g.node(*g.find("time")).raw_labels, (std::set<std::string>{"Time", "time"}));
}

TEST(BuildGraph, RejectsSelfPairsAndEmptyLabels) {
    std::vector<ConceptPair> pairs{{"Mask", "mask!", "d1"}, {"...", "void", "d1"}, {"a", "b", "d1"}};
    auto r = build_graph(pairs, {});
    ASSERT_EQ(r.rejections.size(), 2u);
    EXPECT_EQ(r.rejections[0].index, 0u);
    EXPECT_EQ(r.rejections[1].index, 1u);
    EXPECT_EQ(r.graph.node_count(), 2u);
}

TEST(BuildGraph, ThreeConceptsFromOneDocCoverAllPairs) {
    std::vector<ConceptPair> pairs{{"time", "river", "d1"}, {"river", "flow", "d1"}};
    auto g = build_graph(pairs, {}).graph;
    EXPECT_EQ(g.node_count(), 3u);
    EXPECT_EQ(g.edge_count(), 3u);
    EXPECT_EQ(count_kind(g, EdgeKind::mapping), 2u);
    EXPECT_EQ(count_kind(g, EdgeKind::cooccur), 1u);
    std::set<std::pair<NodeId, NodeId>> covered;
    for (const auto& e : g.edges()) covered.emplace(e.u, e.v);
    EXPECT_EQ(covered.size(), 3u);
}

TEST(BuildGraph, CooccurCanBeDisabled) {
    std::vector<ConceptPair> pairs{{"time", "river", "d1"}, {"river", "flow", "d1"}};
    BuildOptions opts;
    opts.cooccur = false;
    auto g = build_graph(pairs, opts).graph;
    EXPECT_EQ(g.edge_count(), 2u);
    EXPECT_EQ(count_kind(g, EdgeKind::cooccur), 0u);
}

TEST(BuildGraph, TwentyPairCorpusMatchesHashSetOracle) {
    const auto pairs = twenty_pairs();
    for (bool cooccur : {false, true}) {
        SetOracle oracle(pairs, cooccur);
        BuildOptions opts;
        opts.cooccur = cooccur;
        auto r = build_graph(pairs, opts);
        const auto& g = r.graph;

        EXPECT_EQ(r.rejections.size(), oracle.rejected);
        ASSERT_EQ(g.node_count(), oracle.labels.size());
        EXPECT_EQ(count_kind(g, EdgeKind::mapping), oracle.mapping.size());
        EXPECT_EQ(count_kind(g, EdgeKind::cooccur), oracle.cooccur.size());
        EXPECT_EQ(g.edge_count(), oracle.mapping.size() + oracle.cooccur.size());

        std::vector<std::string> sorted(oracle.labels.begin(), oracle.labels.end());
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < sorted.size(); ++i) EXPECT_EQ(g.node(static_cast<NodeId>(i)).label, sorted[i]);

        for (const auto& e : g.edges()) {
            auto key = unordered(g.node(e.u).label, g.node(e.v).label);
            const auto& table = e.kind == EdgeKind::mapping ? oracle.mapping : oracle.cooccur;
            auto it = table.find(key);
            ASSERT_NE(it, table.end());
            EXPECT_EQ(e.weight, it->second);
        }
    }
}

TEST(BuildGraph, AdjacencyIsSymmetric) {
    auto g = build_graph(twenty_pairs(), {}).graph;
    for (const auto& n : g.nodes()) {
        for (const auto& nb : g.neighbors(n.id)) {
            auto back = g.neighbors(nb.node);
            EXPECT_TRUE(std::any_of(back.begin(), back.end(),
                                    [&](const Neighbor& x) { return x.node == n.id && x.kind == nb.kind; }));
        }
    }
}

TEST(BuildGraph, PermutationInvariant) {
    auto pairs = twenty_pairs();
    const std::string reference = serialize_graph(build_graph(pairs, {}).graph);
    std::mt19937_64 rng(99);
    for (int i = 0; i < 25; ++i) {
        std::shuffle(pairs.begin(), pairs.end(), rng);
        EXPECT_EQ(serialize_graph(build_graph(pairs, {}).graph), reference);
    }
}

TEST(BuildGraph, LabelIndexIsBijection) {
    auto g = build_graph(twenty_pairs(), {}).graph;
    for (const auto& n : g.nodes()) EXPECT_EQ(g.find(n.label), n.id);
    EXPECT_FALSE(g.find("no such concept").has_value());
}

namespace {

class FixedEmbedder final : public EmbeddingClient {
public:
    std::map<std::string, std::vector<double>> table;
    std::vector<std::vector<double>> embed(std::span<const std::string> labels) override {
        std::vector<std::vector<double>> out;
        for (const auto& l : labels) out.push_back(table.at(l));
        return out;
    }
};

}  // namespace

TEST(BuildGraph, SimilarEdgesAboveThresholdOnlyWhereUnlinked) {
    std::vector<ConceptPair> pairs{{"rage", "storm", "d1"}, {"anger", "fire", "d2"}};
    FixedEmbedder emb;
    emb.table = {{"rage", {1, 0}}, {"anger", {0.99, 0.14}}, {"storm", {0, 1}}, {"fire", {0.7, 0.7}}};
    BuildOptions opts;
    opts.similar = true;
    opts.similarity_threshold = 0.9;
    opts.embedder = &emb;
    auto g = build_graph(pairs, opts).graph;
    ASSERT_EQ(count_kind(g, EdgeKind::similar), 1u);
    const auto& e = *std::find_if(g.edges().begin(), g.edges().end(),
                                  [](const Edge& x) { return x.kind == EdgeKind::similar; });
    EXPECT_EQ(g.node(e.u).label, "anger");
    EXPECT_EQ(g.node(e.v).label, "rage");
    EXPECT_TRUE(g.meta().similar);
}

TEST(BuildGraph, SimilarWithoutEmbedderIsInputError) {
    BuildOptions opts;
    opts.similar = true;
    std::vector<ConceptPair> pairs{{"a", "b", "d"}};
    EXPECT_THROW(build_graph(pairs, opts), InputError);
}

TEST(MetaphorGraph, ConstructorChecksInvariants) {
    auto node = [](NodeId id, std::string l) { return ConceptNode{id, std::move(l), {}, kRoleSource, 1}; };
    EXPECT_THROW(MetaphorGraph({node(1, "a")}, {}, {}), InvariantError);
    EXPECT_THROW(MetaphorGraph({node(0, "a"), node(1, "a")}, {}, {}), InvariantError);
    EXPECT_THROW(MetaphorGraph({node(0, "a"), node(1, "b")}, {{1, 0, EdgeKind::mapping, 1}}, {}), InvariantError);
    EXPECT_THROW(MetaphorGraph({node(0, "a"), node(1, "b")}, {{0, 1, EdgeKind::mapping, 0}}, {}), InvariantError);
    EXPECT_THROW(MetaphorGraph({node(0, "a"), node(1, "b")},
                               {{0, 1, EdgeKind::mapping, 1}, {0, 1, EdgeKind::mapping, 2}}, {}),
                 InvariantError);
    ConceptNode no_role{0, "a", {}, 0, 1};
    EXPECT_THROW(MetaphorGraph({no_role}, {}, {}), InvariantError);
    MetaphorGraph ok({node(0, "a"), node(1, "b")}, {{0, 1, EdgeKind::mapping, 1}, {0, 1, EdgeKind::cooccur, 1}}, {});
    EXPECT_EQ(ok.meta().edge_count, 2u);
}
