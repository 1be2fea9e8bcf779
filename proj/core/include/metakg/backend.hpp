#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace metakg {

/// Base64 image attached to a chat request.
struct ImagePart {
    std::string mime = "image/jpeg";
    std::string base64;
};

struct ChatRequest {
    std::string system;
    std::string user;
    std::vector<ImagePart> images;
    double temperature = 0.7;
};

struct ChatReply {
    std::optional<std::string> thinking;
    std::string text;
};

/// Stable content digest of a request (system, user, images, temperature).
/// Mock fixtures key replies by this value.
std::string request_digest(const ChatRequest& request);

/// Abstract chat endpoint. Implementations must be safe to call from
/// several threads at once. Transport problems throw BackendError.
class ModelBackend {
public:
    virtual ~ModelBackend() = default;
    virtual ChatReply complete(const ChatRequest& request) = 0;
    [[nodiscard]] virtual std::string id() const = 0;
};

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds base_delay{250};
};

/// Calls `backend.complete` and retries transient BackendErrors with
/// exponential backoff. Rethrows the last error when attempts run out.
ChatReply complete_with_retry(ModelBackend& backend, const ChatRequest& request, const RetryPolicy& policy);

/// Reads an image file and encodes it for a request. MIME type follows the
/// extension (png, webp, gif; anything else is sent as jpeg).
ImagePart load_image(const std::filesystem::path& path);

/// Splits a leading <think>...</think> block off a reply when the backend
/// did not report thinking separately.
ChatReply split_thinking(ChatReply reply);

/// Replaces {{name}} placeholders. Unknown placeholders are left as-is.
std::string render_template(std::string_view tmpl, const std::vector<std::pair<std::string, std::string>>& vars);

}  // namespace metakg
