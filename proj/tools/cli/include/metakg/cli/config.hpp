#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "metakg/backend.hpp"
#include "metakg/graph.hpp"
#include "metakg/http_backend.hpp"

namespace metakg::cli {

/// One named model endpoint. provider is "openai" (any OpenAI-compatible
/// chat endpoint) or "mock" (a reply fixture file).
struct BackendSpec {
    std::string name;
    std::string provider = "openai";
    std::string endpoint;
    std::string model;
    std::string api_key_env;
    std::size_t max_parallel = 1;
    int timeout_s = 120;
    int max_tokens = 0;
    std::filesystem::path fixture;
};

struct KgSettings {
    int h = 2;
    int z = 10;
    QueryMode mode = QueryMode::ranked;
    std::uint64_t seed = 0;
    bool token_fallback = true;
    bool cooccur = true;
    bool similar = false;
    double similarity_threshold = 0.85;
    std::optional<HttpEmbeddingConfig> embedding;
    std::string extractor;
    std::string translator;
    std::size_t batch = 8;
};

struct BoostSettings {
    std::string backend;
    std::size_t max_frames = 16;
    double temperature = 0.7;
};

struct JudgeSettings {
    std::string backend;
    double temperature = 0.0;
};

struct FilterSettings {
    std::vector<std::string> stages{"comment", "llm", "mllm", "human"};
    std::uint64_t comment_threshold = 150;
    std::string classifier;
    std::string verifier;
    double temperature = 0.0;
};

struct PathSettings {
    std::filesystem::path manifest;
    std::filesystem::path graph;
    std::filesystem::path templates;
    std::filesystem::path output_dir;
    std::filesystem::path items;
    std::filesystem::path records;
    std::filesystem::path candidates;
    std::filesystem::path votes;
};

/// Grid of retrieval settings; every combination is one cell.
struct SweepSettings {
    std::vector<int> h{1, 2};
    std::vector<int> z{5, 10};
    std::vector<QueryMode> modes{QueryMode::ranked, QueryMode::random};
    std::uint64_t seed = 0;
};

struct Config {
    std::map<std::string, BackendSpec> backends;
    KgSettings kg;
    BoostSettings boost;
    JudgeSettings judge;
    FilterSettings filter;
    PathSettings paths;
    SweepSettings sweep;
    RetryPolicy retry;
    /// Caps every backend's max_parallel when set.
    std::optional<std::size_t> max_parallel;

    /// Unknown keys are rejected. Relative paths resolve against `base_dir`.
    static Config from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
    static Config from_file(const std::filesystem::path& path);

    /// Range checks: h >= 1, z >= 0, temperatures in [0, 2], max_parallel >= 1.
    void validate() const;
};

struct ResolvedBackend {
    std::unique_ptr<ModelBackend> backend;
    std::size_t max_parallel = 1;
};

/// `spec` is a backend name from the config or "mock:<fixture.json>".
ResolvedBackend make_backend(const std::string& spec, const Config& config);

}  // namespace metakg::cli
