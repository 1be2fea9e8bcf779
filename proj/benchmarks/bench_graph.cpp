#include <algorithm>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <benchmark/benchmark.h>

#include "metakg/graph.hpp"
#include "metakg/graph_io.hpp"

namespace {

using namespace metakg;

constexpr std::size_t kNodes = 54'687;
constexpr std::size_t kEdges = 200'000;

std::string label_for(std::size_t i) { return "concept " + std::to_string(i); }

/// Corpus-sized graph with a skewed degree distribution: a few hubs, many leaves.
const MetaphorGraph& corpus_graph() {
    static const MetaphorGraph graph = [] {
        std::mt19937_64 rng(54687);
        std::vector<std::string> labels;
        for (std::size_t i = 0; i < kNodes; ++i) labels.push_back(label_for(i));
        std::sort(labels.begin(), labels.end());
        std::vector<ConceptNode> nodes;
        std::uniform_int_distribution<std::uint64_t> freq(1, 20);
        for (std::size_t i = 0; i < kNodes; ++i) {
            nodes.push_back({static_cast<NodeId>(i), labels[i], {}, i % 2 ? kRoleSource : kRoleTarget, freq(rng)});
        }
        std::set<std::pair<NodeId, NodeId>> seen;
        std::geometric_distribution<NodeId> hub(0.0005);
        std::uniform_int_distribution<NodeId> any(0, static_cast<NodeId>(kNodes - 1));
        std::vector<Edge> edges;
        while (edges.size() < kEdges) {
            const NodeId a = std::min<NodeId>(hub(rng), kNodes - 1);
            const NodeId b = any(rng);
            if (a == b || !seen.emplace(std::min(a, b), std::max(a, b)).second) continue;
            edges.push_back({std::min(a, b), std::max(a, b), edges.size() % 4 ? EdgeKind::mapping : EdgeKind::cooccur, 1});
        }
        std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
            return std::tie(x.u, x.v, x.kind) < std::tie(y.u, y.v, y.kind);
        });
        return MetaphorGraph(std::move(nodes), std::move(edges), {});
    }();
    return graph;
}

std::vector<std::string> some_keywords(std::size_t count, std::uint64_t seed) {
    const auto& g = corpus_graph();
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, g.node_count() - 1);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(g.nodes()[pick(rng)].label);
    return out;
}

void BM_BuildFromPairs(benchmark::State& state) {
    std::mt19937_64 rng(1);
    const auto n = static_cast<std::size_t>(state.range(0));
    std::uniform_int_distribution<std::size_t> which(0, n / 2);
    std::vector<ConceptPair> pairs;
    for (std::size_t i = 0; i < n; ++i) {
        pairs.push_back({label_for(which(rng)), label_for(which(rng)), "doc" + std::to_string(i / 3)});
    }
    for (auto _ : state) benchmark::DoNotOptimize(build_graph(pairs, {}));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(BM_BuildFromPairs)->Arg(1'000)->Arg(10'000)->Arg(100'000)->Unit(benchmark::kMillisecond);

void BM_HopBall(benchmark::State& state) {
    const auto& g = corpus_graph();
    const std::set<NodeId> seeds{17, 4242, 30'000};
    const int h = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(hop_ball(g, seeds, h));
}
BENCHMARK(BM_HopBall)->Arg(1)->Arg(2)->Arg(3)->Unit(benchmark::kMicrosecond);

void BM_QueryRanked(benchmark::State& state) {
    const auto& g = corpus_graph();
    const auto keywords = some_keywords(static_cast<std::size_t>(state.range(0)), 7);
    QueryParams p;
    for (auto _ : state) benchmark::DoNotOptimize(query_common_connection(g, keywords, p));
}
BENCHMARK(BM_QueryRanked)->Arg(1)->Arg(3)->Arg(6)->Unit(benchmark::kMicrosecond);

void BM_QueryRandom(benchmark::State& state) {
    const auto& g = corpus_graph();
    const auto keywords = some_keywords(3, 11);
    QueryParams p;
    p.mode = QueryMode::random;
    p.seed = 99;
    for (auto _ : state) benchmark::DoNotOptimize(query_common_connection(g, keywords, p));
}
BENCHMARK(BM_QueryRandom)->Unit(benchmark::kMicrosecond);

void BM_SerializeRoundTrip(benchmark::State& state) {
    const auto& g = corpus_graph();
    for (auto _ : state) {
        std::istringstream in(serialize_graph(g));
        benchmark::DoNotOptimize(read_graph(in));
    }
}
BENCHMARK(BM_SerializeRoundTrip)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
