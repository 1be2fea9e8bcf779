#pragma once

// Reference implementations used to check the library. They are written
// for clarity rather than speed and share no code with the code under test
// beyond the graph container.

#include <algorithm>
#include <bitset>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "metakg/graph.hpp"

namespace oracle {

using metakg::ConceptNode;
using metakg::Edge;
using metakg::EdgeKind;
using metakg::MetaphorGraph;
using metakg::NodeId;

inline constexpr std::size_t kMaxNodes = 256;
using Row = std::bitset<kMaxNodes>;

/// Boolean adjacency matrix over every edge kind.
inline std::vector<Row> adjacency_matrix(const MetaphorGraph& g) {
    std::vector<Row> a(g.node_count());
    for (const Edge& e : g.edges()) {
        a[e.u].set(e.v);
        a[e.v].set(e.u);
    }
    return a;
}

inline std::vector<Row> bool_multiply(const std::vector<Row>& x, const std::vector<Row>& y) {
    std::vector<Row> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t k = 0; k < x.size(); ++k) {
            if (x[i].test(k)) out[i] |= y[k];
        }
    }
    return out;
}

/// Distances 1..h from the seed set via powers of (I + A): a node first
/// reachable in (I + A)^k sits at distance k.
inline std::map<NodeId, int> matrix_power_ball(const MetaphorGraph& g, const std::set<NodeId>& seeds, int h) {
    const std::size_t n = g.node_count();
    std::vector<Row> step = adjacency_matrix(g);
    for (std::size_t i = 0; i < n; ++i) step[i].set(i);
    std::vector<Row> power(n);
    for (std::size_t i = 0; i < n; ++i) power[i].set(i);

    Row reached;
    for (NodeId s : seeds) reached.set(s);
    std::map<NodeId, int> out;
    for (int k = 1; k <= h; ++k) {
        power = bool_multiply(power, step);
        Row now;
        for (NodeId s : seeds) now |= power[s];
        for (std::size_t v = 0; v < n; ++v) {
            if (now.test(v) && !reached.test(v)) out[static_cast<NodeId>(v)] = k;
        }
        reached |= now;
    }
    return out;
}

/// All-pairs hop distances (Floyd-Warshall); unreachable = large.
inline std::vector<std::vector<int>> all_pairs(const MetaphorGraph& g) {
    const int inf = std::numeric_limits<int>::max() / 4;
    const std::size_t n = g.node_count();
    std::vector<std::vector<int>> d(n, std::vector<int>(n, inf));
    for (std::size_t i = 0; i < n; ++i) d[i][i] = 0;
    for (const Edge& e : g.edges()) d[e.u][e.v] = d[e.v][e.u] = 1;
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
    return d;
}

inline std::vector<std::string> split_tokens(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string t;
    while (in >> t) out.push_back(t);
    return out;
}

/// Exact label match, otherwise every label sharing a whole token. Keywords
/// are expected already normalized (lowercase ASCII in the fixtures).
inline std::set<NodeId> match(const MetaphorGraph& g, const std::string& keyword, bool fallback = true) {
    std::set<NodeId> out;
    for (const auto& n : g.nodes()) {
        if (n.label == keyword) out.insert(n.id);
    }
    if (!out.empty() || !fallback) return out;
    const auto kw = split_tokens(keyword);
    for (const auto& n : g.nodes()) {
        for (const auto& t : split_tokens(n.label)) {
            if (std::find(kw.begin(), kw.end(), t) != kw.end()) {
                out.insert(n.id);
                break;
            }
        }
    }
    return out;
}

struct Scored {
    NodeId id;
    std::string label;
    int coverage;
    int direct_links;
    int min_hops;
    std::uint64_t freq;
};

/// Scores every node of the graph and sorts by the documented order.
/// `keywords` must be distinct and normalized.
inline std::vector<Scored> enumerate_ranked(const MetaphorGraph& g, const std::vector<std::string>& keywords, int h,
                                            bool fallback = true) {
    const auto dist = all_pairs(g);
    std::vector<std::set<NodeId>> seeds;
    std::set<NodeId> matched;
    for (const auto& k : keywords) {
        seeds.push_back(match(g, k, fallback));
        matched.insert(seeds.back().begin(), seeds.back().end());
    }
    std::vector<Scored> all;
    for (const auto& n : g.nodes()) {
        if (matched.count(n.id)) continue;
        int coverage = 0;
        int best = std::numeric_limits<int>::max();
        for (const auto& s : seeds) {
            bool in_ball = false;
            for (NodeId x : s) {
                if (dist[x][n.id] <= h) {
                    in_ball = true;
                    best = std::min(best, dist[x][n.id]);
                }
            }
            coverage += in_ball ? 1 : 0;
        }
        if (coverage == 0) continue;
        int direct = 0;
        for (const Edge& e : g.edges()) {
            if ((e.u == n.id && matched.count(e.v)) || (e.v == n.id && matched.count(e.u))) ++direct;
        }
        all.push_back({n.id, n.label, coverage, direct, best, n.freq});
    }
    std::stable_sort(all.begin(), all.end(), [](const Scored& a, const Scored& b) {
        return std::make_tuple(-a.coverage, -a.direct_links, a.min_hops, -static_cast<long double>(a.freq), a.label) <
               std::make_tuple(-b.coverage, -b.direct_links, b.min_hops, -static_cast<long double>(b.freq), b.label);
    });
    return all;
}

/// Random graph with unique one- or two-word labels drawn from a small
/// vocabulary (so token matching has something to do), random freqs and
/// up to `max_edges` edges of mixed kinds.
inline MetaphorGraph random_graph(std::mt19937_64& rng, std::size_t max_nodes = 200, std::size_t max_edges = 1000) {
    static const std::vector<std::string> vocab = {
        "red",   "sky",   "river", "time",  "storm", "anger", "rose",  "love",  "fire", "ice",
        "cage",  "bird",  "road",  "life",  "mask",  "truth", "clock", "death", "sea",  "light",
        "shade", "stone", "heart", "wolf",  "lamb",  "crown", "chain", "door",  "key",  "tide"};
    std::uniform_int_distribution<std::size_t> node_count(2, max_nodes);
    const std::size_t n = node_count(rng);

    std::set<std::string> labels;
    std::uniform_int_distribution<std::size_t> word(0, vocab.size() - 1);
    std::uniform_int_distribution<int> coin(0, 2);
    int serial = 0;
    while (labels.size() < n) {
        std::string l = vocab[word(rng)];
        const int shape = coin(rng);
        if (shape == 1) l += " " + vocab[word(rng)];
        if (shape == 2 || labels.count(l)) l += " n" + std::to_string(serial++);
        labels.insert(l);
    }
    std::vector<std::string> ordered(labels.begin(), labels.end());
    std::shuffle(ordered.begin(), ordered.end(), rng);

    std::vector<ConceptNode> nodes;
    std::uniform_int_distribution<std::uint64_t> freq(1, 4);
    std::uniform_int_distribution<int> role(1, 3);
    for (std::size_t i = 0; i < n; ++i) {
        ConceptNode c;
        c.id = static_cast<NodeId>(i);
        c.label = ordered[i];
        c.raw_labels = {c.label};
        c.roles = static_cast<std::uint8_t>(role(rng));
        c.freq = freq(rng);
        nodes.push_back(std::move(c));
    }

    const std::size_t possible = n * (n - 1) / 2 * 3;
    std::uniform_int_distribution<std::size_t> edge_count(0, std::min(max_edges, possible));
    const std::size_t m = edge_count(rng);
    std::set<std::tuple<NodeId, NodeId, EdgeKind>> keys;
    std::uniform_int_distribution<NodeId> pick(0, static_cast<NodeId>(n - 1));
    std::uniform_int_distribution<int> kind(0, 9);
    while (keys.size() < m) {
        NodeId a = pick(rng);
        NodeId b = pick(rng);
        if (a == b) continue;
        const int k = kind(rng);
        const EdgeKind ek = k < 6 ? EdgeKind::mapping : (k < 9 ? EdgeKind::cooccur : EdgeKind::similar);
        keys.emplace(std::min(a, b), std::max(a, b), ek);
    }
    std::vector<Edge> edges;
    std::uniform_int_distribution<std::uint64_t> weight(1, 5);
    for (const auto& [u, v, k] : keys) edges.push_back({u, v, k, weight(rng)});
    return MetaphorGraph(std::move(nodes), std::move(edges), {});
}

/// 1..max_k distinct keywords: node labels, single tokens of labels (which
/// exercise the fallback when not themselves labels) and misses.
inline std::vector<std::string> random_keywords(std::mt19937_64& rng, const MetaphorGraph& g, std::size_t max_k = 5) {
    std::uniform_int_distribution<std::size_t> count(1, max_k);
    std::uniform_int_distribution<std::size_t> node(0, g.node_count() - 1);
    std::uniform_int_distribution<int> shape(0, 5);
    std::vector<std::string> out;
    const std::size_t k = count(rng);
    for (std::size_t i = 0; i < k * 3 && out.size() < k; ++i) {
        std::string kw;
        const int s = shape(rng);
        const std::string& label = g.nodes()[node(rng)].label;
        if (s <= 2) kw = label;
        else if (s <= 4) kw = split_tokens(label).front();
        else kw = "zzz" + std::to_string(i);
        if (std::find(out.begin(), out.end(), kw) == out.end()) out.push_back(kw);
    }
    return out;
}

/// Sample Pearson r from its textbook definition: cov(x, y) / (sd(x) sd(y)).
inline double pearson_direct(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double cov = 0, vx = 0, vy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        cov += (x[i] - mx) * (y[i] - my);
        vx += (x[i] - mx) * (x[i] - mx);
        vy += (y[i] - my) * (y[i] - my);
    }
    cov /= n - 1;
    return cov / (std::sqrt(vx / (n - 1)) * std::sqrt(vy / (n - 1)));
}

}  // namespace oracle
