#include "metakg/boost.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "metakg/error.hpp"
#include "metakg/frames.hpp"
#include "metakg/graph_io.hpp"
#include "metakg/normalize.hpp"
#include "metakg/parallel.hpp"

namespace metakg {

std::string_view run_mode_name(RunMode mode) noexcept {
    return mode == RunMode::boost ? "boost" : "baseline";
}

MediaItem item_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    MediaItem item;
    try {
        j.at("item_id").get_to(item.item_id);
        item.title = j.value("title", std::string{});
        for (const auto& f : j.at("frames")) {
            std::filesystem::path p = f.get<std::string>();
            if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
            item.frame_paths.push_back(std::move(p));
        }
        if (auto t = j.find("metaphor_type"); t != j.end() && !t->is_null()) {
            item.metaphor_type = parse_metaphor_type(t->get<std::string>());
            if (!item.metaphor_type) throw InputError("unknown metaphor_type " + t->dump());
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("bad item record: ") + e.what());
    }
    if (item.item_id.empty()) throw InputError("item_id must be non-empty");
    if (item.frame_paths.empty()) throw InputError("item " + item.item_id + " has no frames");
    return item;
}

std::vector<MediaItem> load_items(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open items file " + path.string());
    std::vector<MediaItem> items;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw InputError(path.string() + " line " + std::to_string(line_no) + ": invalid JSON");
        items.push_back(item_from_json(j, path.parent_path()));
    }
    return items;
}

// ---------------------------------------------------------------------------
// BoostOutput JSON
// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const BoostOutput& out) {
    j = nlohmann::json::object();
    j["item_id"] = out.item_id;
    j["status"] = out.ok ? "ok" : "failed";
    j["mode"] = run_mode_name(out.mode);
    j["backend"] = out.backend;
    j["params"] = {{"h", out.h}, {"z", out.z}, {"temperature", out.temperature}};
    if (out.mode == RunMode::boost) {
        j["query"] = out.query;
        j["keywords"] = out.keywords;
    }
    j["retrieval"] = out.retrieval ? nlohmann::json(*out.retrieval) : nlohmann::json(nullptr);
    if (out.ok) {
        j["thinking"] = out.thinking;
        j["interpretation"] = out.interpretation;
    } else {
        j["failed_stage"] = out.failed_stage;
        j["error"] = out.error;
        if (!out.raw_reply.empty()) j["raw_reply"] = out.raw_reply;
    }
    if (!out.notes.empty()) j["notes"] = out.notes;
}

void from_json(const nlohmann::json& j, BoostOutput& out) {
    j.at("item_id").get_to(out.item_id);
    out.ok = j.value("status", std::string("ok")) == "ok";
    const std::string mode = j.at("mode").get<std::string>();
    if (mode != "boost" && mode != "baseline") throw InputError("unknown run mode " + mode);
    out.mode = mode == "boost" ? RunMode::boost : RunMode::baseline;
    out.backend = j.value("backend", std::string{});
    const auto& p = j.at("params");
    p.at("h").get_to(out.h);
    p.at("z").get_to(out.z);
    p.at("temperature").get_to(out.temperature);
    if (j.contains("query")) j.at("query").get_to(out.query);
    if (j.contains("keywords")) j.at("keywords").get_to(out.keywords);
    if (j.contains("retrieval") && !j.at("retrieval").is_null()) out.retrieval = j.at("retrieval").get<RetrievalResult>();
    out.thinking = j.value("thinking", std::string{});
    out.interpretation = j.value("interpretation", std::string{});
    out.failed_stage = j.value("failed_stage", std::string{});
    out.error = j.value("error", std::string{});
    out.raw_reply = j.value("raw_reply", std::string{});
    if (j.contains("notes")) j.at("notes").get_to(out.notes);
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> dedupe_normalized(const std::vector<std::string>& raw) {
    std::vector<std::string> out;
    for (const auto& r : raw) {
        std::string n = normalize_label(r);
        if (!n.empty() && std::find(out.begin(), out.end(), n) == out.end()) out.push_back(std::move(n));
    }
    return out;
}

std::optional<std::vector<std::string>> string_array(std::string_view text) {
    auto j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_array()) return std::nullopt;
    std::vector<std::string> out;
    for (const auto& e : j) {
        if (!e.is_string()) return std::nullopt;
        out.push_back(e.get<std::string>());
    }
    return out;
}

std::string strip_list_marker(std::string_view line) {
    std::size_t b = line.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    line.remove_prefix(b);
    if (line.starts_with("- ") || line.starts_with("* ")) {
        line.remove_prefix(2);
    } else if (line.starts_with("\xE2\x80\xA2")) {  // bullet
        line.remove_prefix(3);
    } else {
        std::size_t d = 0;
        while (d < line.size() && std::isdigit(static_cast<unsigned char>(line[d]))) ++d;
        if (d > 0 && d < line.size() && (line[d] == '.' || line[d] == ')')) line.remove_prefix(d + 1);
    }
    std::string s(line);
    while (!s.empty() && (s.back() == ',' || s.back() == ' ' || s.back() == '\r' || s.back() == '\t')) s.pop_back();
    return s;
}

}  // namespace

std::optional<std::vector<std::string>> parse_keyword_list(std::string_view reply) {
    if (auto arr = string_array(reply)) return dedupe_normalized(*arr);

    auto open = reply.find('[');
    auto close = reply.rfind(']');
    if (open != std::string_view::npos && close != std::string_view::npos && close > open) {
        if (auto arr = string_array(reply.substr(open, close - open + 1))) return dedupe_normalized(*arr);
    }

    constexpr std::size_t kMaxTokens = 6;
    std::vector<std::string> items;
    std::size_t pos = 0;
    while (pos <= reply.size()) {
        std::size_t nl = reply.find('\n', pos);
        if (nl == std::string_view::npos) nl = reply.size();
        std::string item = strip_list_marker(reply.substr(pos, nl - pos));
        pos = nl + 1;
        if (item.empty()) continue;
        std::string norm = normalize_label(item);
        if (norm.empty()) continue;
        if (label_tokens(norm).size() > kMaxTokens) return std::nullopt;
        items.push_back(std::move(item));
    }
    if (items.empty()) return std::nullopt;
    return dedupe_normalized(items);
}

std::string format_references(const RetrievalResult& retrieval) {
    if (retrieval.entries.empty()) return "Possible underlying concepts: none (no references retrieved).";
    std::string out = "Possible underlying concepts: ";
    for (std::size_t i = 0; i < retrieval.entries.size(); ++i) {
        if (i > 0) out += ", ";
        out += retrieval.entries[i].label;
    }
    out += ".";
    return out;
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

std::vector<ImagePart> load_item_frames(const MediaItem& item, std::size_t max_frames) {
    std::vector<ImagePart> images;
    for (std::size_t i : evenly_spaced(item.frame_paths.size(), max_frames)) {
        images.push_back(load_image(item.frame_paths[i]));
    }
    return images;
}

std::vector<std::string> identify_elements(const MediaItem& item, const std::vector<ImagePart>& frames,
                                           ModelBackend& backend, const TemplateSet& templates,
                                           const BoostConfig& cfg) {
    ChatRequest req;
    req.user = render_template(templates.get("identify"), {{"title", item.title}});
    req.images = frames;
    req.temperature = cfg.temperature;
    ChatReply reply;
    try {
        reply = split_thinking(complete_with_retry(backend, req, cfg.retry));
    } catch (const BackendError& e) {
        throw StageError("identify", e.what());
    }
    auto keywords = parse_keyword_list(reply.text);
    if (!keywords) throw StageError("identify", "could not parse a keyword list from the reply", reply.text);
    return *keywords;
}

namespace {

BoostOutput skeleton(const MediaItem& item, RunMode mode, const ModelBackend& backend, const BoostConfig& cfg) {
    BoostOutput out;
    out.item_id = item.item_id;
    out.mode = mode;
    out.backend = backend.id();
    out.h = cfg.query.h;
    out.z = cfg.query.z;
    out.temperature = cfg.temperature;
    out.query = cfg.query;
    return out;
}

ChatReply generate(const MediaItem& item, const std::vector<ImagePart>& frames, ModelBackend& backend,
                   const std::string& prompt, const BoostConfig& cfg) {
    ChatRequest req;
    req.user = prompt;
    req.images = frames;
    req.temperature = cfg.temperature;
    try {
        ChatReply reply = split_thinking(complete_with_retry(backend, req, cfg.retry));
        if (reply.text.find_first_not_of(" \t\r\n") == std::string::npos) {
            throw StageError("generate", "empty interpretation for " + item.item_id);
        }
        return reply;
    } catch (const BackendError& e) {
        throw StageError("generate", e.what());
    }
}

std::vector<ImagePart> frames_or_throw(const MediaItem& item, std::size_t max_frames) {
    try {
        return load_item_frames(item, max_frames);
    } catch (const InputError& e) {
        throw StageError("frames", e.what());
    }
}

void fail(BoostOutput& out, const StageError& e) {
    out.ok = false;
    out.failed_stage = e.stage();
    out.error = e.what();
    out.raw_reply = e.raw();
    out.thinking.clear();
    out.interpretation.clear();
}

}  // namespace

BoostOutput run_boost(const MediaItem& item, const MetaphorGraph& graph, ModelBackend& backend,
                      const TemplateSet& templates, const BoostConfig& cfg) {
    BoostOutput out = skeleton(item, RunMode::boost, backend, cfg);
    try {
        auto frames = frames_or_throw(item, cfg.max_frames);
        out.keywords = identify_elements(item, frames, backend, templates, cfg);
        if (out.keywords.empty()) out.notes.push_back("identify returned no keywords");

        try {
            out.retrieval = query_common_connection(graph, out.keywords, cfg.query);
        } catch (const std::exception& e) {
            throw StageError("query", e.what());
        }
        if (!out.keywords.empty() && out.retrieval->unmatched.size() == out.retrieval->keywords.size()) {
            out.notes.push_back("no keyword matched the graph");
        }

        const std::string prompt = render_template(
            templates.get("generate"), {{"title", item.title}, {"references", format_references(*out.retrieval)}});
        ChatReply reply = generate(item, frames, backend, prompt, cfg);
        out.thinking = reply.thinking.value_or("");
        out.interpretation = std::move(reply.text);
    } catch (const StageError& e) {
        fail(out, e);
    }
    return out;
}

BoostOutput run_baseline(const MediaItem& item, ModelBackend& backend, const TemplateSet& templates,
                         const BoostConfig& cfg) {
    BoostOutput out = skeleton(item, RunMode::baseline, backend, cfg);
    try {
        auto frames = frames_or_throw(item, cfg.max_frames);
        const std::string prompt = render_template(templates.get("baseline"), {{"title", item.title}});
        ChatReply reply = generate(item, frames, backend, prompt, cfg);
        out.thinking = reply.thinking.value_or("");
        out.interpretation = std::move(reply.text);
    } catch (const StageError& e) {
        fail(out, e);
    }
    return out;
}

std::vector<BoostOutput> run_batch(const std::vector<MediaItem>& items, RunMode mode, const MetaphorGraph* graph,
                                   ModelBackend& backend, const TemplateSet& templates, const BoostConfig& cfg,
                                   std::size_t max_parallel) {
    if (mode == RunMode::boost && graph == nullptr) throw InputError("boost mode requires a graph");
    return parallel_map(items.size(), max_parallel, [&](std::size_t i) {
        return mode == RunMode::boost ? run_boost(items[i], *graph, backend, templates, cfg)
                                      : run_baseline(items[i], backend, templates, cfg);
    });
}

RetrievalResult replay_retrieval(const MetaphorGraph& graph, const BoostOutput& recorded) {
    if (recorded.mode != RunMode::boost) throw InputError("only boost outputs carry a retrieval to replay");
    return query_common_connection(graph, recorded.keywords, recorded.query);
}

}  // namespace metakg
