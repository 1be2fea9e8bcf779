#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "metakg/graph.hpp"

namespace metakg {

// Line-oriented graph file, UTF-8:
//   MKG1 <node_count> <edge_count> <digest-hex>
//   N <id> <freq> <roles-bitmask> <label-escaped>
//   E <u> <v> <m|c|s> <weight>
// The digest is SHA-256 over the node and edge lines, each '\n'-terminated.

inline constexpr std::string_view kGraphMagic = "MKG1";

std::string escape_label(std::string_view label);
/// Throws InputError on a dangling or unknown escape.
std::string unescape_label(std::string_view escaped);

std::string graph_digest(const std::vector<ConceptNode>& nodes, const std::vector<Edge>& edges);

void write_graph(std::ostream& out, const MetaphorGraph& graph);
std::string serialize_graph(const MetaphorGraph& graph);
void save_graph(const std::filesystem::path& path, const MetaphorGraph& graph);

/// Verifies header counts and digest; any mismatch is an InputError.
MetaphorGraph read_graph(std::istream& in);
MetaphorGraph load_graph(const std::filesystem::path& path);

void to_json(nlohmann::json& j, const RetrievalEntry& e);
void from_json(const nlohmann::json& j, RetrievalEntry& e);
void to_json(nlohmann::json& j, const QueryParams& p);
void from_json(const nlohmann::json& j, QueryParams& p);
void to_json(nlohmann::json& j, const RetrievalResult& r);
void from_json(const nlohmann::json& j, RetrievalResult& r);

}  // namespace metakg
