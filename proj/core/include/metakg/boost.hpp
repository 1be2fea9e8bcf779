#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "metakg/backend.hpp"
#include "metakg/graph.hpp"
#include "metakg/taxonomy.hpp"
#include "metakg/templates.hpp"

namespace metakg {

struct MediaItem {
    std::string item_id;
    std::vector<std::filesystem::path> frame_paths;
    std::string title;
    std::optional<MetaphorType> metaphor_type;
};

/// Reads items from JSON Lines: {"item_id", "title", "frames": [...], "metaphor_type"?}.
/// Relative frame paths resolve against the file's directory.
std::vector<MediaItem> load_items(const std::filesystem::path& path);
MediaItem item_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});

struct BoostConfig {
    QueryParams query;  ///< h = 2, z = 10, ranked
    double temperature = 0.7;
    std::size_t max_frames = 16;
    RetryPolicy retry;
};

enum class RunMode { baseline, boost };

std::string_view run_mode_name(RunMode mode) noexcept;

struct BoostOutput {
    std::string item_id;
    RunMode mode = RunMode::boost;
    std::string backend;
    int h = 0;
    int z = 0;
    double temperature = 0.0;
    QueryParams query;
    std::vector<std::string> keywords;
    std::optional<RetrievalResult> retrieval;
    std::string thinking;
    std::string interpretation;
    std::vector<std::string> notes;

    bool ok = true;
    std::string failed_stage;  ///< frames | identify | query | generate
    std::string error;
    std::string raw_reply;     ///< backend reply that failed to parse, for debugging
};

void to_json(nlohmann::json& j, const BoostOutput& out);
void from_json(const nlohmann::json& j, BoostOutput& out);

/// Error raised inside a pipeline stage; becomes a failure record.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& what, std::string raw = {})
        : std::runtime_error(what), stage_(std::move(stage)), raw_(std::move(raw)) {}
    [[nodiscard]] const std::string& stage() const noexcept { return stage_; }
    [[nodiscard]] const std::string& raw() const noexcept { return raw_; }

private:
    std::string stage_;
    std::string raw_;
};

/// Keyword list from a model reply. Tries a JSON array of strings, then the
/// first bracketed [...] span, then one keyword per line (bullets and
/// numbering stripped). Returns nullopt when none of these fit.
/// Result is normalized and deduplicated in first-seen order.
std::optional<std::vector<std::string>> parse_keyword_list(std::string_view reply);

/// Reference block injected into the generation prompt.
std::string format_references(const RetrievalResult& retrieval);

/// Loads the item's frames (evenly thinned to cfg.max_frames) as images.
std::vector<ImagePart> load_item_frames(const MediaItem& item, std::size_t max_frames);

/// Asks the backend for visual-element keywords. Throws StageError("identify").
std::vector<std::string> identify_elements(const MediaItem& item, const std::vector<ImagePart>& frames,
                                           ModelBackend& backend, const TemplateSet& templates,
                                           const BoostConfig& cfg);

/// identify -> query graph -> generate with retrieved concepts as references.
/// Never throws for stage failures; returns a failure record instead.
BoostOutput run_boost(const MediaItem& item, const MetaphorGraph& graph, ModelBackend& backend,
                      const TemplateSet& templates, const BoostConfig& cfg);

/// Direct interpretation from frames and title only.
BoostOutput run_baseline(const MediaItem& item, ModelBackend& backend, const TemplateSet& templates,
                         const BoostConfig& cfg);

/// Runs every item with at most `max_parallel` concurrent items; output
/// order follows input order. `graph` may be null in baseline mode.
std::vector<BoostOutput> run_batch(const std::vector<MediaItem>& items, RunMode mode, const MetaphorGraph* graph,
                                   ModelBackend& backend, const TemplateSet& templates, const BoostConfig& cfg,
                                   std::size_t max_parallel);

/// Re-runs the query stage on a recorded output's keywords.
RetrievalResult replay_retrieval(const MetaphorGraph& graph, const BoostOutput& recorded);

}  // namespace metakg
