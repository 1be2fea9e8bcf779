#include "metakg/mock_backend.hpp"

#include <fstream>

#include "metakg/error.hpp"

namespace metakg {

FixtureBackend::FixtureBackend(const nlohmann::json& fixture) {
    if (!fixture.is_object()) throw InputError("mock fixture must be a JSON object");
    id_ = fixture.value("id", std::string("mock"));
    if (auto it = fixture.find("replies"); it != fixture.end()) {
        for (const auto& [digest, reply] : it->items()) by_digest_.emplace(digest, reply);
    }
    if (auto it = fixture.find("rules"); it != fixture.end()) {
        for (const auto& r : *it) {
            Rule rule;
            const auto& c = r.at("contains");
            if (c.is_string()) rule.contains.push_back(c.get<std::string>());
            else rule.contains = c.get<std::vector<std::string>>();
            rule.reply = r.at("reply");
            rules_.push_back(std::move(rule));
        }
    }
    if (auto it = fixture.find("default"); it != fixture.end()) fallback_ = *it;
    // Validate every reply up front so a bad fixture fails at load time.
    for (const auto& [d, reply] : by_digest_) (void)materialize(reply);
    for (const auto& r : rules_) (void)materialize(r.reply);
    if (fallback_) (void)materialize(*fallback_);
}

std::unique_ptr<FixtureBackend> FixtureBackend::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open mock fixture " + path.string());
    try {
        return std::make_unique<FixtureBackend>(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw InputError("mock fixture " + path.string() + ": " + e.what());
    }
}

ChatReply FixtureBackend::materialize(const nlohmann::json& reply) {
    if (reply.is_string()) return {std::nullopt, reply.get<std::string>()};
    if (!reply.is_object()) throw InputError("mock reply must be a string or object");
    if (reply.contains("error")) return {};
    ChatReply out;
    out.text = reply.at("text").get<std::string>();
    if (reply.contains("thinking")) out.thinking = reply.at("thinking").get<std::string>();
    return out;
}

ChatReply FixtureBackend::complete(const ChatRequest& request) {
    calls_.fetch_add(1, std::memory_order_relaxed);
    const nlohmann::json* chosen = nullptr;
    const std::string digest = request_digest(request);
    if (auto it = by_digest_.find(digest); it != by_digest_.end()) {
        chosen = &it->second;
    } else {
        const std::string haystack = request.system + "\n" + request.user;
        for (const auto& rule : rules_) {
            bool all = true;
            for (const auto& needle : rule.contains) {
                if (haystack.find(needle) == std::string::npos) {
                    all = false;
                    break;
                }
            }
            if (all) {
                chosen = &rule.reply;
                break;
            }
        }
        if (!chosen && fallback_) chosen = &*fallback_;
    }
    if (!chosen) throw BackendError(id_ + ": no scripted reply for request " + digest, false);
    if (chosen->is_object() && chosen->contains("error")) {
        throw BackendError(id_ + ": " + chosen->at("error").get<std::string>(), chosen->value("transient", true));
    }
    return materialize(*chosen);
}

}  // namespace metakg
