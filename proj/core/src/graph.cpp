#include "metakg/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>

#include "metakg/error.hpp"
#include "metakg/graph_io.hpp"
#include "metakg/normalize.hpp"

namespace metakg {

char edge_kind_char(EdgeKind kind) noexcept {
    switch (kind) {
        case EdgeKind::mapping: return 'm';
        case EdgeKind::cooccur: return 'c';
        case EdgeKind::similar: return 's';
    }
    return '?';
}

std::optional<EdgeKind> edge_kind_from_char(char c) noexcept {
    switch (c) {
        case 'm': return EdgeKind::mapping;
        case 'c': return EdgeKind::cooccur;
        case 's': return EdgeKind::similar;
        default: return std::nullopt;
    }
}

std::string_view edge_kind_name(EdgeKind kind) noexcept {
    switch (kind) {
        case EdgeKind::mapping: return "mapping";
        case EdgeKind::cooccur: return "cooccur";
        case EdgeKind::similar: return "similar";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// MetaphorGraph
// ---------------------------------------------------------------------------

MetaphorGraph::MetaphorGraph(std::vector<ConceptNode> nodes, std::vector<Edge> edges, GraphMeta meta)
    : nodes_(std::move(nodes)), edges_(std::move(edges)), meta_(std::move(meta)) {
    if (nodes_.size() > std::numeric_limits<NodeId>::max()) {
        throw InvariantError("too many nodes");
    }
    label_index_.reserve(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const ConceptNode& n = nodes_[i];
        if (n.id != i) throw InvariantError("node ids must be contiguous 0..N-1");
        if (n.label.empty()) throw InvariantError("empty node label");
        if (n.freq == 0) throw InvariantError("node freq must be >= 1: " + n.label);
        if ((n.roles & (kRoleSource | kRoleTarget)) == 0 || (n.roles & ~(kRoleSource | kRoleTarget)) != 0) {
            throw InvariantError("node roles must be a non-empty subset of {source,target}: " + n.label);
        }
        if (!label_index_.emplace(n.label, n.id).second) {
            throw InvariantError("duplicate node label: " + n.label);
        }
        for (auto& tok : label_tokens(n.label)) {
            auto& bucket = token_index_[tok];
            if (bucket.empty() || bucket.back() != n.id) bucket.push_back(n.id);
        }
    }

    adjacency_.assign(nodes_.size(), {});
    for (std::size_t i = 0; i < edges_.size(); ++i) {
        const Edge& e = edges_[i];
        if (e.u >= e.v) throw InvariantError("edges must satisfy u < v (no self loops)");
        if (e.v >= nodes_.size()) throw InvariantError("edge endpoint out of range");
        if (e.weight == 0) throw InvariantError("edge weight must be positive");
        if (i > 0) {
            const Edge& p = edges_[i - 1];
            auto key = [](const Edge& x) { return std::tuple(x.u, x.v, x.kind); };
            if (!(key(p) < key(e))) throw InvariantError("edges must be sorted and unique per (u, v, kind)");
        }
        adjacency_[e.u].push_back({e.v, e.kind});
        adjacency_[e.v].push_back({e.u, e.kind});
    }
    for (auto& list : adjacency_) {
        std::sort(list.begin(), list.end(), [](const Neighbor& a, const Neighbor& b) {
            return std::tie(a.node, a.kind) < std::tie(b.node, b.kind);
        });
    }

    meta_.node_count = nodes_.size();
    meta_.edge_count = edges_.size();
}

const ConceptNode& MetaphorGraph::node(NodeId id) const {
    if (!valid(id)) throw InvariantError("node id out of range: " + std::to_string(id));
    return nodes_[id];
}

std::span<const Neighbor> MetaphorGraph::neighbors(NodeId id) const {
    if (!valid(id)) throw InvariantError("node id out of range: " + std::to_string(id));
    return adjacency_[id];
}

std::optional<NodeId> MetaphorGraph::find(std::string_view normalized_label) const {
    auto it = label_index_.find(std::string(normalized_label));
    if (it == label_index_.end()) return std::nullopt;
    return it->second;
}

std::span<const NodeId> MetaphorGraph::nodes_with_token(std::string_view token) const {
    auto it = token_index_.find(std::string(token));
    if (it == token_index_.end()) return {};
    return it->second;
}

// ---------------------------------------------------------------------------
// Build
// ---------------------------------------------------------------------------

namespace {

struct NodeAccum {
    std::set<std::string> raw;
    std::uint8_t roles = 0;
    std::uint64_t freq = 0;
};

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0 || nb == 0) return 0;
    return dot / std::sqrt(na * nb);
}

}  // namespace

BuildResult build_graph(std::span<const ConceptPair> pairs, const BuildOptions& options) {
    if (options.similar && options.embedder == nullptr) {
        throw InputError("similar edges requested without an embedding client");
    }

    BuildResult result;
    std::map<std::string, NodeAccum> accum;
    struct Valid {
        std::string source, target;
        const std::string* doc_id;
    };
    std::vector<Valid> valid;
    valid.reserve(pairs.size());

    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const ConceptPair& p = pairs[i];
        std::string s = normalize_label(p.source);
        std::string t = normalize_label(p.target);
        if (s.empty() || t.empty()) {
            result.rejections.push_back({i, "label normalizes to empty"});
            continue;
        }
        if (s == t) {
            result.rejections.push_back({i, "source equals target after normalization: " + s});
            continue;
        }
        auto& sa = accum[s];
        sa.raw.insert(p.source);
        sa.roles |= kRoleSource;
        ++sa.freq;
        auto& ta = accum[t];
        ta.raw.insert(p.target);
        ta.roles |= kRoleTarget;
        ++ta.freq;
        valid.push_back({std::move(s), std::move(t), &p.doc_id});
    }

    // std::map iterates in byte order, which for UTF-8 is code point order.
    std::vector<ConceptNode> nodes;
    nodes.reserve(accum.size());
    std::unordered_map<std::string, NodeId> ids;
    ids.reserve(accum.size());
    for (auto& [label, a] : accum) {
        NodeId id = static_cast<NodeId>(nodes.size());
        ids.emplace(label, id);
        nodes.push_back({id, label, std::move(a.raw), a.roles, a.freq});
    }

    using Key = std::pair<NodeId, NodeId>;
    auto ordered = [](NodeId a, NodeId b) { return a < b ? Key{a, b} : Key{b, a}; };

    std::map<Key, std::uint64_t> mapping;
    std::map<std::string_view, std::set<NodeId>> per_doc;
    for (const Valid& v : valid) {
        NodeId s = ids.at(v.source);
        NodeId t = ids.at(v.target);
        ++mapping[ordered(s, t)];
        if (options.cooccur) {
            auto& bucket = per_doc[*v.doc_id];
            bucket.insert(s);
            bucket.insert(t);
        }
    }

    // Co-occurrence only densifies pairs the mapping layer left unlinked.
    std::map<Key, std::uint64_t> cooccur;
    for (const auto& [doc, members] : per_doc) {
        std::vector<NodeId> m(members.begin(), members.end());
        for (std::size_t i = 0; i < m.size(); ++i) {
            for (std::size_t j = i + 1; j < m.size(); ++j) {
                Key k{m[i], m[j]};
                if (!mapping.contains(k)) ++cooccur[k];
            }
        }
    }

    std::map<Key, std::uint64_t> similar;
    if (options.similar && nodes.size() > 1) {
        std::vector<std::string> labels;
        labels.reserve(nodes.size());
        for (const auto& n : nodes) labels.push_back(n.label);
        auto vecs = options.embedder->embed(labels);
        if (vecs.size() != labels.size()) {
            throw InputError("embedding client returned wrong number of vectors");
        }
        for (std::size_t i = 0; i < vecs.size(); ++i) {
            if (vecs[i].size() != vecs[0].size()) throw InputError("embedding dimensions differ");
        }
        for (NodeId i = 0; i < nodes.size(); ++i) {
            for (NodeId j = i + 1; j < nodes.size(); ++j) {
                Key k{i, j};
                if (mapping.contains(k) || cooccur.contains(k)) continue;
                if (cosine(vecs[i], vecs[j]) >= options.similarity_threshold) similar[k] = 1;
            }
        }
    }

    std::vector<Edge> edges;
    edges.reserve(mapping.size() + cooccur.size() + similar.size());
    auto emit = [&](const std::map<Key, std::uint64_t>& m, EdgeKind kind) {
        for (const auto& [k, w] : m) edges.push_back({k.first, k.second, kind, w});
    };
    emit(mapping, EdgeKind::mapping);
    emit(cooccur, EdgeKind::cooccur);
    emit(similar, EdgeKind::similar);
    std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
        return std::tie(a.u, a.v, a.kind) < std::tie(b.u, b.v, b.kind);
    });

    GraphMeta meta;
    meta.cooccur = options.cooccur;
    meta.similar = options.similar;
    meta.similarity_threshold = options.similar ? options.similarity_threshold : 0.0;
    meta.digest = graph_digest(nodes, edges);
    result.graph = MetaphorGraph(std::move(nodes), std::move(edges), std::move(meta));
    return result;
}

// ---------------------------------------------------------------------------
// Queries
// ---------------------------------------------------------------------------

KeywordMatches match_keywords(const MetaphorGraph& graph, std::span<const std::string> keywords,
                              const MatchOptions& options) {
    KeywordMatches out;
    for (const auto& kw : keywords) {
        auto& ids = out[kw];
        std::string norm = normalize_label(kw);
        if (norm.empty()) continue;
        if (auto id = graph.find(norm)) {
            ids.insert(*id);
            continue;
        }
        if (!options.token_fallback) continue;
        for (const auto& tok : label_tokens(norm)) {
            for (NodeId id : graph.nodes_with_token(tok)) ids.insert(id);
        }
    }
    return out;
}

std::map<NodeId, int> hop_ball(const MetaphorGraph& graph, const std::set<NodeId>& seeds, int h) {
    if (h < 1) throw InvariantError("hop_ball requires h >= 1");
    std::vector<int> dist(graph.node_count(), -1);
    std::deque<NodeId> frontier;
    for (NodeId s : seeds) {
        if (!graph.valid(s)) throw InvariantError("hop_ball seed out of range: " + std::to_string(s));
        dist[s] = 0;
        frontier.push_back(s);
    }
    std::map<NodeId, int> ball;
    while (!frontier.empty()) {
        NodeId cur = frontier.front();
        frontier.pop_front();
        if (dist[cur] == h) continue;
        for (const Neighbor& n : graph.neighbors(cur)) {
            if (dist[n.node] != -1) continue;
            dist[n.node] = dist[cur] + 1;
            ball.emplace(n.node, dist[n.node]);
            frontier.push_back(n.node);
        }
    }
    return ball;
}

bool ranks_before(const RetrievalEntry& a, std::uint64_t freq_a, const RetrievalEntry& b,
                  std::uint64_t freq_b) noexcept {
    if (a.coverage != b.coverage) return a.coverage > b.coverage;
    if (a.direct_links != b.direct_links) return a.direct_links > b.direct_links;
    if (a.min_hops != b.min_hops) return a.min_hops < b.min_hops;
    if (freq_a != freq_b) return freq_a > freq_b;
    return a.label < b.label;
}

namespace {

void validate(const QueryParams& params) {
    if (params.h < 1) throw InputError("h must be >= 1");
    if (params.z < 0) throw InputError("z must be >= 0");
}

// Unbiased draw in [0, bound) from a 64-bit engine; independent of the
// standard library's distribution implementation.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % bound;
}

}  // namespace

std::vector<RetrievalEntry> score_candidates(const MetaphorGraph& graph,
                                             std::span<const std::string> keywords,
                                             const QueryParams& params,
                                             std::vector<std::string>* distinct_keywords,
                                             std::vector<std::string>* unmatched) {
    validate(params);
    std::vector<std::string> distinct;
    for (const auto& kw : keywords) {
        std::string n = normalize_label(kw);
        if (!n.empty() && std::find(distinct.begin(), distinct.end(), n) == distinct.end()) {
            distinct.push_back(std::move(n));
        }
    }

    KeywordMatches matches = match_keywords(graph, distinct, params.match);
    std::set<NodeId> matched_all;
    for (const auto& [kw, ids] : matches) matched_all.insert(ids.begin(), ids.end());

    std::map<NodeId, RetrievalEntry> scored;
    for (const auto& kw : distinct) {
        const auto& seeds = matches.at(kw);
        if (seeds.empty()) {
            if (unmatched) unmatched->push_back(kw);
            continue;
        }
        for (const auto& [id, hops] : hop_ball(graph, seeds, params.h)) {
            if (matched_all.contains(id)) continue;
            auto [it, inserted] = scored.try_emplace(id);
            RetrievalEntry& e = it->second;
            if (inserted) {
                e.id = id;
                e.label = graph.node(id).label;
                e.min_hops = hops;
            }
            ++e.coverage;
            e.min_hops = std::min(e.min_hops, hops);
        }
    }

    std::vector<RetrievalEntry> out;
    out.reserve(scored.size());
    for (auto& [id, e] : scored) {
        for (const Neighbor& n : graph.neighbors(id)) {
            if (matched_all.contains(n.node)) ++e.direct_links;
        }
        out.push_back(std::move(e));
    }
    if (distinct_keywords) *distinct_keywords = std::move(distinct);
    return out;
}

RetrievalResult query_common_connection(const MetaphorGraph& graph,
                                        std::span<const std::string> keywords,
                                        const QueryParams& params) {
    validate(params);
    RetrievalResult result;
    result.params = params;
    auto candidates = score_candidates(graph, keywords, params, &result.keywords, &result.unmatched);
    result.candidate_count = candidates.size();

    auto by_rank = [&](const RetrievalEntry& a, const RetrievalEntry& b) {
        return ranks_before(a, graph.node(a.id).freq, b, graph.node(b.id).freq);
    };
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(params.z), candidates.size());

    if (params.mode == QueryMode::ranked) {
        std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take),
                          candidates.end(), by_rank);
        candidates.resize(take);
    } else {
        // Partial Fisher-Yates over candidates in ascending id order.
        std::mt19937_64 rng(params.seed);
        for (std::size_t i = 0; i < take; ++i) {
            std::size_t j = i + static_cast<std::size_t>(bounded(rng, candidates.size() - i));
            std::swap(candidates[i], candidates[j]);
        }
        candidates.resize(take);
        std::sort(candidates.begin(), candidates.end(), by_rank);
    }
    result.entries = std::move(candidates);
    return result;
}

bool operator==(const RetrievalResult& a, const RetrievalResult& b) {
    return a.entries == b.entries && a.params.h == b.params.h && a.params.z == b.params.z &&
           a.params.mode == b.params.mode &&
           (a.params.mode == QueryMode::ranked || a.params.seed == b.params.seed) &&
           a.keywords == b.keywords && a.unmatched == b.unmatched &&
           a.candidate_count == b.candidate_count;
}

std::string_view query_mode_name(QueryMode mode) noexcept {
    return mode == QueryMode::ranked ? "ranked" : "random";
}

std::optional<QueryMode> parse_query_mode(std::string_view name) noexcept {
    if (name == "ranked") return QueryMode::ranked;
    if (name == "random") return QueryMode::random;
    return std::nullopt;
}

}  // namespace metakg
