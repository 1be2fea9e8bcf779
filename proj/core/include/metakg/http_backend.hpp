#pragma once

#include <chrono>
#include <string>

#include "metakg/backend.hpp"
#include "metakg/graph.hpp"

namespace metakg {

struct HttpBackendConfig {
    std::string name;
    /// Full URL of an OpenAI-compatible chat completions endpoint,
    /// e.g. http://localhost:8000/v1/chat/completions
    std::string endpoint;
    std::string model;
    /// Environment variable holding the bearer token; empty means no auth.
    std::string api_key_env;
    std::chrono::seconds timeout{120};
    int max_tokens = 0;  ///< 0 leaves the server default
};

class HttpChatBackend final : public ModelBackend {
public:
    explicit HttpChatBackend(HttpBackendConfig config);

    ChatReply complete(const ChatRequest& request) override;
    [[nodiscard]] std::string id() const override { return config_.name.empty() ? config_.model : config_.name; }

    /// Request body sent for `request`; exposed for tests.
    [[nodiscard]] nlohmann::json request_body(const ChatRequest& request) const;
    /// Parses an OpenAI-style response body. Throws BackendError(non-transient)
    /// when the shape is wrong.
    static ChatReply parse_response(const std::string& body);

private:
    HttpBackendConfig config_;
};

struct HttpEmbeddingConfig {
    /// Full URL of an OpenAI-compatible embeddings endpoint.
    std::string endpoint;
    std::string model;
    std::string api_key_env;
    std::chrono::seconds timeout{120};
    std::size_t batch = 256;
};

class HttpEmbeddingClient final : public EmbeddingClient {
public:
    explicit HttpEmbeddingClient(HttpEmbeddingConfig config) : config_(std::move(config)) {}
    std::vector<std::vector<double>> embed(std::span<const std::string> labels) override;

private:
    HttpEmbeddingConfig config_;
};

}  // namespace metakg
