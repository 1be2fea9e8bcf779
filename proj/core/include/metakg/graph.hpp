#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace metakg {

using NodeId = std::uint32_t;

/// Which side(s) of extracted (source, target) pairs a concept appeared on.
enum RoleBits : std::uint8_t {
    kRoleSource = 1u << 0,
    kRoleTarget = 1u << 1,
};

enum class EdgeKind : std::uint8_t { mapping, cooccur, similar };

char edge_kind_char(EdgeKind kind) noexcept;
std::optional<EdgeKind> edge_kind_from_char(char c) noexcept;
std::string_view edge_kind_name(EdgeKind kind) noexcept;

struct ConceptNode {
    NodeId id = 0;
    std::string label;
    std::set<std::string> raw_labels;
    std::uint8_t roles = 0;
    std::uint64_t freq = 0;
};

/// Undirected, stored with u < v. Direction of mapping pairs lives in the
/// endpoint roles, not on the edge.
struct Edge {
    NodeId u = 0;
    NodeId v = 0;
    EdgeKind kind = EdgeKind::mapping;
    std::uint64_t weight = 0;

    friend bool operator==(const Edge&, const Edge&) = default;
};

struct Neighbor {
    NodeId node;
    EdgeKind kind;
};

/// Supplies embedding vectors for the optional similarity layer.
class EmbeddingClient {
public:
    virtual ~EmbeddingClient() = default;
    /// One vector per label, same order, equal dimensions.
    virtual std::vector<std::vector<double>> embed(std::span<const std::string> labels) = 0;
};

struct BuildOptions {
    bool cooccur = true;
    bool similar = false;
    double similarity_threshold = 0.85;
    /// Required when `similar` is set; not owned.
    EmbeddingClient* embedder = nullptr;
};

struct ConceptPair {
    std::string source;
    std::string target;
    std::string doc_id;
};

struct BuildRejection {
    std::size_t index;  ///< position in the input pair list
    std::string reason;
};

struct GraphMeta {
    bool cooccur = false;
    bool similar = false;
    double similarity_threshold = 0.0;
    std::size_t node_count = 0;
    std::size_t edge_count = 0;
    std::string digest;
};

class MetaphorGraph;

struct BuildResult;

/// Deterministic construction: node ids follow sorted label order, edges
/// are sorted by (u, v, kind). Invalid pairs are skipped and reported.
BuildResult build_graph(std::span<const ConceptPair> pairs, const BuildOptions& options);

/// Immutable concept graph. Safe for concurrent readers once built.
class MetaphorGraph {
public:
    MetaphorGraph() = default;

    /// Assembles a graph from already-validated parts and checks every
    /// structural invariant; throws InvariantError on violation.
    MetaphorGraph(std::vector<ConceptNode> nodes, std::vector<Edge> edges, GraphMeta meta);

    [[nodiscard]] std::size_t node_count() const noexcept { return nodes_.size(); }
    [[nodiscard]] std::size_t edge_count() const noexcept { return edges_.size(); }
    [[nodiscard]] const std::vector<ConceptNode>& nodes() const noexcept { return nodes_; }
    [[nodiscard]] const std::vector<Edge>& edges() const noexcept { return edges_; }
    [[nodiscard]] const GraphMeta& meta() const noexcept { return meta_; }
    [[nodiscard]] const ConceptNode& node(NodeId id) const;
    [[nodiscard]] std::span<const Neighbor> neighbors(NodeId id) const;
    [[nodiscard]] std::optional<NodeId> find(std::string_view normalized_label) const;
    /// Nodes whose label contains `token` as a whole space-separated token.
    [[nodiscard]] std::span<const NodeId> nodes_with_token(std::string_view token) const;
    [[nodiscard]] bool valid(NodeId id) const noexcept { return id < nodes_.size(); }

private:
    std::vector<ConceptNode> nodes_;
    std::vector<Edge> edges_;
    std::unordered_map<std::string, NodeId> label_index_;
    std::unordered_map<std::string, std::vector<NodeId>> token_index_;
    std::vector<std::vector<Neighbor>> adjacency_;
    GraphMeta meta_;
};

struct BuildResult {
    MetaphorGraph graph;
    std::vector<BuildRejection> rejections;
};

// ---------------------------------------------------------------------------
// Queries
// ---------------------------------------------------------------------------

struct MatchOptions {
    /// When a keyword has no exact label match, fall back to labels sharing
    /// at least one whole token with it.
    bool token_fallback = true;
};

/// keyword (as given) -> matched node ids. Unmatched keywords map to {}.
using KeywordMatches = std::map<std::string, std::set<NodeId>>;

KeywordMatches match_keywords(const MetaphorGraph& graph, std::span<const std::string> keywords,
                              const MatchOptions& options = {});

/// BFS distances 1..h from the seed set over all edge kinds. Seeds are
/// excluded. Throws InvariantError for unknown ids or h < 1.
std::map<NodeId, int> hop_ball(const MetaphorGraph& graph, const std::set<NodeId>& seeds, int h);

enum class QueryMode { ranked, random };

struct QueryParams {
    int h = 2;
    int z = 10;
    QueryMode mode = QueryMode::ranked;
    std::uint64_t seed = 0;  ///< used only by QueryMode::random
    MatchOptions match;
};

struct RetrievalEntry {
    NodeId id = 0;
    std::string label;
    int coverage = 0;      ///< distinct keywords whose h-ball contains the node
    int direct_links = 0;  ///< edges to keyword-matched nodes
    int min_hops = 0;      ///< nearest keyword-matched node

    friend bool operator==(const RetrievalEntry&, const RetrievalEntry&) = default;
};

struct RetrievalResult {
    std::vector<RetrievalEntry> entries;
    QueryParams params;
    std::vector<std::string> keywords;   ///< distinct normalized keywords queried
    std::vector<std::string> unmatched;  ///< subset of `keywords` with no node
    std::size_t candidate_count = 0;
};

bool operator==(const RetrievalResult& a, const RetrievalResult& b);

/// Ranking order: coverage desc, direct_links desc, min_hops asc, freq desc,
/// label asc. Returns true when `a` ranks strictly before `b`.
bool ranks_before(const RetrievalEntry& a, std::uint64_t freq_a, const RetrievalEntry& b,
                  std::uint64_t freq_b) noexcept;

/// All scored candidates (unsorted, ascending id), before truncation.
std::vector<RetrievalEntry> score_candidates(const MetaphorGraph& graph,
                                             std::span<const std::string> keywords,
                                             const QueryParams& params,
                                             std::vector<std::string>* distinct_keywords = nullptr,
                                             std::vector<std::string>* unmatched = nullptr);

/// Top-z common-connection query. Throws InputError for h < 1 or z < 0.
RetrievalResult query_common_connection(const MetaphorGraph& graph,
                                        std::span<const std::string> keywords,
                                        const QueryParams& params);

std::string_view query_mode_name(QueryMode mode) noexcept;
std::optional<QueryMode> parse_query_mode(std::string_view name) noexcept;

}  // namespace metakg
