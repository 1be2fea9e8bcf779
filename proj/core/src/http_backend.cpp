#include "metakg/http_backend.hpp"

#include <cstdlib>

#include <httplib.h>

#include "metakg/error.hpp"

namespace metakg {
namespace {

struct Url {
    std::string base;  ///< scheme://host[:port]
    std::string path;
};

Url split_url(const std::string& url) {
    auto scheme = url.find("://");
    if (scheme == std::string::npos) throw InputError("endpoint must be an absolute URL: " + url);
    auto slash = url.find('/', scheme + 3);
    if (slash == std::string::npos) return {url, "/"};
    return {url.substr(0, slash), url.substr(slash)};
}

std::string api_key(const std::string& env) {
    if (env.empty()) return {};
    const char* v = std::getenv(env.c_str());
    if (v == nullptr || *v == '\0') {
        throw BackendError("environment variable " + env + " is not set", false);
    }
    return v;
}

bool transient_status(int status) {
    return status == 408 || status == 409 || status == 429 || status >= 500;
}

httplib::Result post_json(const Url& url, const std::string& key, std::chrono::seconds timeout,
                          const nlohmann::json& body) {
    httplib::Client client(url.base);
    client.set_connection_timeout(std::chrono::seconds(10));
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers headers;
    if (!key.empty()) headers.emplace("Authorization", "Bearer " + key);
    return client.Post(url.path, headers, body.dump(), "application/json");
}

void check(const httplib::Result& res, const std::string& what) {
    if (!res) throw BackendError(what + ": transport error: " + httplib::to_string(res.error()), true);
    if (res->status < 200 || res->status >= 300) {
        throw BackendError(what + ": HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 512),
                           transient_status(res->status));
    }
}

}  // namespace

HttpChatBackend::HttpChatBackend(HttpBackendConfig config) : config_(std::move(config)) {
    (void)split_url(config_.endpoint);
    if (config_.model.empty()) throw InputError("backend " + config_.name + ": model id is required");
}

nlohmann::json HttpChatBackend::request_body(const ChatRequest& request) const {
    nlohmann::json messages = nlohmann::json::array();
    if (!request.system.empty()) messages.push_back({{"role", "system"}, {"content", request.system}});
    nlohmann::json content = nlohmann::json::array();
    content.push_back({{"type", "text"}, {"text", request.user}});
    for (const auto& img : request.images) {
        content.push_back({{"type", "image_url"},
                           {"image_url", {{"url", "data:" + img.mime + ";base64," + img.base64}}}});
    }
    messages.push_back({{"role", "user"}, {"content", std::move(content)}});
    nlohmann::json body = {{"model", config_.model}, {"messages", std::move(messages)},
                           {"temperature", request.temperature}};
    if (config_.max_tokens > 0) body["max_tokens"] = config_.max_tokens;
    return body;
}

ChatReply HttpChatBackend::parse_response(const std::string& body) {
    try {
        auto j = nlohmann::json::parse(body);
        const auto& msg = j.at("choices").at(0).at("message");
        ChatReply reply;
        const auto& content = msg.at("content");
        if (content.is_string()) {
            reply.text = content.get<std::string>();
        } else if (content.is_array()) {
            for (const auto& part : content) {
                if (part.value("type", "") == "text") reply.text += part.value("text", "");
            }
        } else if (!content.is_null()) {
            throw BackendError("unexpected content type in response", false);
        }
        for (const char* key : {"reasoning_content", "reasoning"}) {
            if (msg.contains(key) && msg[key].is_string() && !msg[key].get<std::string>().empty()) {
                reply.thinking = msg[key].get<std::string>();
                break;
            }
        }
        return split_thinking(std::move(reply));
    } catch (const nlohmann::json::exception& e) {
        throw BackendError(std::string("malformed chat response: ") + e.what(), false);
    }
}

ChatReply HttpChatBackend::complete(const ChatRequest& request) {
    const Url url = split_url(config_.endpoint);
    auto res = post_json(url, api_key(config_.api_key_env), config_.timeout, request_body(request));
    check(res, id());
    return parse_response(res->body);
}

std::vector<std::vector<double>> HttpEmbeddingClient::embed(std::span<const std::string> labels) {
    const Url url = split_url(config_.endpoint);
    const std::string key = api_key(config_.api_key_env);
    std::vector<std::vector<double>> out;
    out.reserve(labels.size());
    const std::size_t batch = std::max<std::size_t>(config_.batch, 1);
    for (std::size_t start = 0; start < labels.size(); start += batch) {
        auto chunk = labels.subspan(start, std::min(batch, labels.size() - start));
        nlohmann::json body = {{"model", config_.model},
                               {"input", std::vector<std::string>(chunk.begin(), chunk.end())}};
        auto res = post_json(url, key, config_.timeout, body);
        check(res, "embeddings");
        try {
            auto j = nlohmann::json::parse(res->body);
            const auto& data = j.at("data");
            if (data.size() != chunk.size()) throw BackendError("embeddings: wrong vector count", false);
            std::vector<std::vector<double>> vecs(chunk.size());
            for (const auto& item : data) {
                auto idx = item.value("index", std::size_t{0});
                if (idx >= vecs.size()) throw BackendError("embeddings: index out of range", false);
                vecs[idx] = item.at("embedding").get<std::vector<double>>();
            }
            for (auto& v : vecs) out.push_back(std::move(v));
        } catch (const nlohmann::json::exception& e) {
            throw BackendError(std::string("malformed embeddings response: ") + e.what(), false);
        }
    }
    return out;
}

}  // namespace metakg
