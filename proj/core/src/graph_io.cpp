#include "metakg/graph_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "metakg/digest.hpp"
#include "metakg/error.hpp"
#include "metakg/normalize.hpp"

namespace metakg {

std::string escape_label(std::string_view label) {
    std::string out;
    out.reserve(label.size());
    for (char c : label) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case ' ': out += "\\s"; break;
            default: out += c;
        }
    }
    return out;
}

std::string unescape_label(std::string_view escaped) {
    std::string out;
    out.reserve(escaped.size());
    for (std::size_t i = 0; i < escaped.size(); ++i) {
        char c = escaped[i];
        if (c != '\\') {
            out += c;
            continue;
        }
        if (++i == escaped.size()) throw InputError("dangling escape in label");
        switch (escaped[i]) {
            case '\\': out += '\\'; break;
            case 'n': out += '\n'; break;
            case 's': out += ' '; break;
            default: throw InputError(std::string("unknown escape \\") + escaped[i] + " in label");
        }
    }
    return out;
}

namespace {

void write_body(std::ostream& out, const std::vector<ConceptNode>& nodes, const std::vector<Edge>& edges) {
    for (const auto& n : nodes) {
        out << "N " << n.id << ' ' << n.freq << ' ' << static_cast<unsigned>(n.roles) << ' '
            << escape_label(n.label) << '\n';
    }
    for (const auto& e : edges) {
        out << "E " << e.u << ' ' << e.v << ' ' << edge_kind_char(e.kind) << ' ' << e.weight << '\n';
    }
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (pos <= line.size()) {
        std::size_t next = line.find(' ', pos);
        if (next == std::string_view::npos) next = line.size();
        fields.push_back(line.substr(pos, next - pos));
        pos = next + 1;
    }
    return fields;
}

template <typename T>
T parse_uint(std::string_view field, std::size_t line_no) {
    T value{};
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
        throw InputError("graph file line " + std::to_string(line_no) + ": bad integer '" +
                         std::string(field) + "'");
    }
    return value;
}

}  // namespace

std::string graph_digest(const std::vector<ConceptNode>& nodes, const std::vector<Edge>& edges) {
    std::ostringstream body;
    write_body(body, nodes, edges);
    return sha256_hex(body.str());
}

void write_graph(std::ostream& out, const MetaphorGraph& graph) {
    std::ostringstream body;
    write_body(body, graph.nodes(), graph.edges());
    const std::string text = body.str();
    out << kGraphMagic << ' ' << graph.node_count() << ' ' << graph.edge_count() << ' '
        << sha256_hex(text) << '\n'
        << text;
}

std::string serialize_graph(const MetaphorGraph& graph) {
    std::ostringstream out;
    write_graph(out, graph);
    return out.str();
}

void save_graph(const std::filesystem::path& path, const MetaphorGraph& graph) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot open " + path.string() + " for writing");
    write_graph(out, graph);
    out.flush();
    if (!out) throw InputError("failed writing " + path.string());
}

MetaphorGraph read_graph(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw InputError("graph file is empty");
    auto header = split_fields(line);
    if (header.size() != 4 || header[0] != kGraphMagic) {
        throw InputError("graph file header must be 'MKG1 <nodes> <edges> <digest>'");
    }
    const auto node_count = parse_uint<std::size_t>(header[1], 1);
    const auto edge_count = parse_uint<std::size_t>(header[2], 1);
    const std::string expected_digest(header[3]);

    std::vector<ConceptNode> nodes;
    std::vector<Edge> edges;
    std::string body;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        body += line;
        body += '\n';
        auto f = split_fields(line);
        if (f.size() == 5 && f[0] == "N") {
            ConceptNode n;
            n.id = parse_uint<NodeId>(f[1], line_no);
            n.freq = parse_uint<std::uint64_t>(f[2], line_no);
            n.roles = parse_uint<std::uint8_t>(f[3], line_no);
            n.label = unescape_label(f[4]);
            if (normalize_label(n.label) != n.label) {
                throw InputError("graph file line " + std::to_string(line_no) + ": label not normalized");
            }
            n.raw_labels.insert(n.label);
            nodes.push_back(std::move(n));
        } else if (f.size() == 5 && f[0] == "E" && f[3].size() == 1) {
            auto kind = edge_kind_from_char(f[3][0]);
            if (!kind) throw InputError("graph file line " + std::to_string(line_no) + ": bad edge kind");
            edges.push_back({parse_uint<NodeId>(f[1], line_no), parse_uint<NodeId>(f[2], line_no), *kind,
                             parse_uint<std::uint64_t>(f[4], line_no)});
        } else {
            throw InputError("graph file line " + std::to_string(line_no) + ": unrecognized record");
        }
    }
    if (nodes.size() != node_count || edges.size() != edge_count) {
        throw InputError("graph file counts do not match header (header " + std::to_string(node_count) +
                         "/" + std::to_string(edge_count) + ", found " + std::to_string(nodes.size()) + "/" +
                         std::to_string(edges.size()) + ")");
    }
    const std::string actual = sha256_hex(body);
    if (actual != expected_digest) {
        throw InputError("graph file digest mismatch: header " + expected_digest + ", content " + actual);
    }

    GraphMeta meta;
    meta.digest = actual;
    for (const auto& e : edges) {
        meta.cooccur |= e.kind == EdgeKind::cooccur;
        meta.similar |= e.kind == EdgeKind::similar;
    }
    try {
        return MetaphorGraph(std::move(nodes), std::move(edges), std::move(meta));
    } catch (const InvariantError& e) {
        throw InputError(std::string("graph file violates graph invariants: ") + e.what());
    }
}

MetaphorGraph load_graph(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open graph file " + path.string());
    return read_graph(in);
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const RetrievalEntry& e) {
    j = {{"id", e.id},
         {"label", e.label},
         {"coverage", e.coverage},
         {"direct_links", e.direct_links},
         {"min_hops", e.min_hops}};
}

void from_json(const nlohmann::json& j, RetrievalEntry& e) {
    j.at("id").get_to(e.id);
    j.at("label").get_to(e.label);
    j.at("coverage").get_to(e.coverage);
    j.at("direct_links").get_to(e.direct_links);
    j.at("min_hops").get_to(e.min_hops);
}

void to_json(nlohmann::json& j, const QueryParams& p) {
    j = {{"h", p.h}, {"z", p.z}, {"mode", query_mode_name(p.mode)}, {"token_fallback", p.match.token_fallback}};
    if (p.mode == QueryMode::random) j["seed"] = p.seed;
}

void from_json(const nlohmann::json& j, QueryParams& p) {
    j.at("h").get_to(p.h);
    j.at("z").get_to(p.z);
    auto mode = parse_query_mode(j.at("mode").get<std::string>());
    if (!mode) throw InputError("unknown query mode " + j.at("mode").dump());
    p.mode = *mode;
    p.seed = j.value("seed", std::uint64_t{0});
    p.match.token_fallback = j.value("token_fallback", true);
}

void to_json(nlohmann::json& j, const RetrievalResult& r) {
    j = {{"params", r.params},
         {"keywords", r.keywords},
         {"unmatched", r.unmatched},
         {"candidate_count", r.candidate_count},
         {"entries", r.entries}};
}

void from_json(const nlohmann::json& j, RetrievalResult& r) {
    j.at("params").get_to(r.params);
    j.at("keywords").get_to(r.keywords);
    j.at("unmatched").get_to(r.unmatched);
    j.at("candidate_count").get_to(r.candidate_count);
    j.at("entries").get_to(r.entries);
}

}  // namespace metakg
