#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "metakg/backend.hpp"

namespace metakg {

/// Backend driven by a callback; used by tests that compute replies.
class ScriptedBackend final : public ModelBackend {
public:
    using Script = std::function<ChatReply(const ChatRequest&)>;

    explicit ScriptedBackend(Script script, std::string id = "scripted")
        : script_(std::move(script)), id_(std::move(id)) {}

    ChatReply complete(const ChatRequest& request) override {
        calls_.fetch_add(1, std::memory_order_relaxed);
        return script_(request);
    }
    [[nodiscard]] std::string id() const override { return id_; }
    [[nodiscard]] std::size_t calls() const noexcept { return calls_.load(); }

private:
    Script script_;
    std::string id_;
    std::atomic<std::size_t> calls_{0};
};

/// Replays replies from a fixture. Lookup order: exact request digest, then
/// the first rule whose `contains` strings all occur in system + user text,
/// then `default`. A reply is either a string, {"text", "thinking"}, or
/// {"error": msg, "transient": bool} to simulate transport failures.
///
///   {"id": "mock-vlm",
///    "replies": {"<digest>": "..."},
///    "rules": [{"contains": ["pig"], "reply": "[\"pig\"]"}],
///    "default": "..."}
class FixtureBackend final : public ModelBackend {
public:
    explicit FixtureBackend(const nlohmann::json& fixture);
    static std::unique_ptr<FixtureBackend> from_file(const std::filesystem::path& path);

    ChatReply complete(const ChatRequest& request) override;
    [[nodiscard]] std::string id() const override { return id_; }
    [[nodiscard]] std::size_t calls() const noexcept { return calls_.load(); }

private:
    struct Rule {
        std::vector<std::string> contains;
        nlohmann::json reply;
    };

    static ChatReply materialize(const nlohmann::json& reply);

    std::string id_;
    std::map<std::string, nlohmann::json> by_digest_;
    std::vector<Rule> rules_;
    std::optional<nlohmann::json> fallback_;
    std::atomic<std::size_t> calls_{0};
};

}  // namespace metakg
