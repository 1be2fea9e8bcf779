#include "metakg/backend.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iterator>
#include <thread>

#include <spdlog/spdlog.h>

#include "metakg/digest.hpp"
#include "metakg/error.hpp"

namespace metakg {

std::string request_digest(const ChatRequest& request) {
    nlohmann::json images = nlohmann::json::array();
    for (const auto& img : request.images) images.push_back({{"mime", img.mime}, {"base64", img.base64}});
    nlohmann::json canon = {{"system", request.system},
                            {"user", request.user},
                            {"images", std::move(images)},
                            {"temperature", request.temperature}};
    return sha256_hex(canon.dump());
}

ChatReply complete_with_retry(ModelBackend& backend, const ChatRequest& request, const RetryPolicy& policy) {
    const int attempts = std::max(policy.max_attempts, 1);
    auto delay = policy.base_delay;
    for (int attempt = 1;; ++attempt) {
        try {
            return backend.complete(request);
        } catch (const BackendError& e) {
            if (!e.transient() || attempt >= attempts) throw;
            spdlog::warn("{}: attempt {}/{} failed: {}", backend.id(), attempt, attempts, e.what());
            if (delay.count() > 0) std::this_thread::sleep_for(delay);
            delay *= 2;
        }
    }
}

ImagePart load_image(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read image " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    ImagePart part;
    if (ext == ".png") part.mime = "image/png";
    else if (ext == ".webp") part.mime = "image/webp";
    else if (ext == ".gif") part.mime = "image/gif";
    part.base64 = base64_encode(bytes);
    return part;
}

ChatReply split_thinking(ChatReply reply) {
    if (reply.thinking) return reply;
    constexpr std::string_view kOpen = "<think>";
    constexpr std::string_view kClose = "</think>";
    std::string_view text = reply.text;
    std::size_t lead = text.find_first_not_of(" \t\r\n");
    if (lead == std::string_view::npos || text.substr(lead, kOpen.size()) != kOpen) return reply;
    std::size_t close = text.find(kClose, lead);
    if (close == std::string_view::npos) return reply;
    std::string thinking(text.substr(lead + kOpen.size(), close - lead - kOpen.size()));
    std::string rest(text.substr(close + kClose.size()));
    auto trim = [](std::string s) {
        auto b = s.find_first_not_of(" \t\r\n");
        auto e = s.find_last_not_of(" \t\r\n");
        return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    reply.thinking = trim(std::move(thinking));
    reply.text = trim(std::move(rest));
    return reply;
}

std::string render_template(std::string_view tmpl, const std::vector<std::pair<std::string, std::string>>& vars) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        std::size_t open = tmpl.find("{{", pos);
        if (open == std::string_view::npos) break;
        std::size_t close = tmpl.find("}}", open + 2);
        if (close == std::string_view::npos) break;
        out.append(tmpl.substr(pos, open - pos));
        std::string_view name = tmpl.substr(open + 2, close - open - 2);
        auto it = std::find_if(vars.begin(), vars.end(), [&](const auto& kv) { return kv.first == name; });
        if (it != vars.end()) out += it->second;
        else out.append(tmpl.substr(open, close + 2 - open));
        pos = close + 2;
    }
    out.append(tmpl.substr(pos));
    return out;
}

}  // namespace metakg
