#include "metakg/filter.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include "metakg/error.hpp"
#include "metakg/eval.hpp"
#include "metakg/frames.hpp"
#include "metakg/parallel.hpp"

namespace metakg {

std::string_view stage_verdict_name(StageVerdict v) noexcept {
    switch (v) {
        case StageVerdict::kept: return "kept";
        case StageVerdict::rejected: return "rejected";
        case StageVerdict::needs_review: return "needs_review";
    }
    return "unknown";
}

void to_json(nlohmann::json& j, const Candidate& c) {
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& t : c.stage_trace) {
        trace.push_back({{"stage", t.stage}, {"verdict", stage_verdict_name(t.verdict)}, {"rationale", t.rationale}});
    }
    std::vector<std::string> frames;
    for (const auto& f : c.frame_paths) frames.push_back(f.string());
    j = {{"item_id", c.item_id}, {"comment_count", c.comment_count}, {"intro", c.intro},
         {"asr", c.asr},         {"comments", c.comments},           {"frames", frames},
         {"stage_trace", trace}};
    j["metaphor_type"] = c.metaphor_type ? nlohmann::json(metaphor_type_id(*c.metaphor_type)) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, Candidate& c) {
    j.at("item_id").get_to(c.item_id);
    c.comment_count = j.value("comment_count", std::uint64_t{0});
    c.intro = j.value("intro", std::string{});
    c.asr = j.value("asr", std::string{});
    c.comments = j.value("comments", std::vector<std::string>{});
    c.frame_paths.clear();
    for (const auto& f : j.value("frames", std::vector<std::string>{})) c.frame_paths.emplace_back(f);
    c.metaphor_type.reset();
    if (auto t = j.find("metaphor_type"); t != j.end() && !t->is_null()) {
        c.metaphor_type = parse_metaphor_type(t->get<std::string>());
        if (!c.metaphor_type) throw InputError("unknown metaphor_type for candidate " + c.item_id);
    }
    c.stage_trace.clear();
    for (const auto& t : j.value("stage_trace", nlohmann::json::array())) {
        TraceEntry e;
        t.at("stage").get_to(e.stage);
        const auto v = t.at("verdict").get<std::string>();
        if (v == "kept") e.verdict = StageVerdict::kept;
        else if (v == "rejected") e.verdict = StageVerdict::rejected;
        else if (v == "needs_review") e.verdict = StageVerdict::needs_review;
        else throw InputError("unknown trace verdict " + v);
        e.rationale = t.value("rationale", std::string{});
        c.stage_trace.push_back(std::move(e));
    }
}

std::vector<Candidate> load_candidates(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open candidates file " + path.string());
    std::vector<Candidate> out;
    std::set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = path.string() + " line " + std::to_string(line_no);
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) throw InputError(where + ": not a JSON object");
        Candidate c;
        try {
            j.get_to(c);
        } catch (const nlohmann::json::exception& e) {
            throw InputError(where + ": " + e.what());
        }
        for (auto& f : c.frame_paths) {
            if (f.is_relative()) f = path.parent_path() / f;
        }
        if (!seen.insert(c.item_id).second) throw InputError(where + ": duplicate item_id " + c.item_id);
        out.push_back(std::move(c));
    }
    return out;
}

void to_json(nlohmann::json& j, const StageReport& r) {
    j = {{"stage", r.stage}, {"in", r.in}, {"kept", r.kept}, {"rejected", r.rejected}, {"needs_review", r.needs_review}};
}

void from_json(const nlohmann::json& j, StageReport& r) {
    j.at("stage").get_to(r.stage);
    j.at("in").get_to(r.in);
    j.at("kept").get_to(r.kept);
    j.at("rejected").get_to(r.rejected);
    j.at("needs_review").get_to(r.needs_review);
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

namespace {

void place(StageOutput& out, Candidate c, const std::string& stage, StageVerdict v, std::string rationale) {
    c.stage_trace.push_back({stage, v, std::move(rationale)});
    switch (v) {
        case StageVerdict::kept: out.kept.push_back(std::move(c)); break;
        case StageVerdict::rejected: out.rejected.push_back(std::move(c)); break;
        case StageVerdict::needs_review: out.needs_review.push_back(std::move(c)); break;
    }
}

std::string join_comments(const std::vector<std::string>& comments) {
    std::string out;
    for (const auto& c : comments) {
        out += "- ";
        out += c;
        out += '\n';
    }
    if (!out.empty()) out.pop_back();
    return out;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::optional<bool> yes_no(std::string word) {
    word = lower(std::move(word));
    if (word == "yes" || word == "true" || word == "accept") return true;
    if (word == "no" || word == "false" || word == "reject") return false;
    return std::nullopt;
}

std::optional<ClassifierDecision> decision_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("verdict")) return std::nullopt;
    const auto& v = j["verdict"];
    std::optional<bool> accept;
    if (v.is_boolean()) accept = v.get<bool>();
    else if (v.is_string()) accept = yes_no(v.get<std::string>());
    if (!accept) return std::nullopt;
    std::string rationale;
    if (auto r = j.find("rationale"); r != j.end() && r->is_string()) rationale = r->get<std::string>();
    return ClassifierDecision{*accept, std::move(rationale)};
}

struct Classified {
    std::optional<ClassifierDecision> decision;
    std::string problem;
};

Classified classify(ModelBackend& backend, ChatRequest req, const ClassifierConfig& cfg) {
    Classified out;
    for (int attempt = 0; attempt < 2; ++attempt) {
        if (attempt == 1) {
            req.user += "\n\nYour previous reply could not be read. Answer with JSON only: "
                        "{\"verdict\": \"yes\" | \"no\", \"rationale\": \"...\"}.";
        }
        try {
            auto reply = split_thinking(complete_with_retry(backend, req, cfg.retry));
            if ((out.decision = parse_classifier_reply(reply.text))) return out;
            out.problem = "unparseable classifier reply: " + reply.text.substr(0, 200);
        } catch (const BackendError& e) {
            out.problem = std::string("classifier backend: ") + e.what();
            return out;
        }
    }
    return out;
}

StageOutput run_classifier_stage(std::vector<Candidate> cands, const std::string& stage, ModelBackend& backend,
                                 const ClassifierConfig& cfg,
                                 const std::function<ChatRequest(const Candidate&)>& make_request) {
    auto results = parallel_map(cands.size(), cfg.max_parallel, [&](std::size_t i) -> Classified {
        ChatRequest req;
        try {
            req = make_request(cands[i]);
        } catch (const InputError& e) {
            return {std::nullopt, e.what()};
        }
        req.temperature = cfg.temperature;
        return classify(backend, std::move(req), cfg);
    });
    StageOutput out;
    for (std::size_t i = 0; i < cands.size(); ++i) {
        auto& r = results[i];
        if (!r.decision) {
            place(out, std::move(cands[i]), stage, StageVerdict::needs_review, std::move(r.problem));
        } else {
            place(out, std::move(cands[i]), stage, r.decision->accept ? StageVerdict::kept : StageVerdict::rejected,
                  std::move(r.decision->rationale));
        }
    }
    return out;
}

}  // namespace

std::optional<ClassifierDecision> parse_classifier_reply(std::string_view reply) {
    auto j = nlohmann::json::parse(reply, nullptr, false);
    if (!j.is_discarded()) {
        if (auto d = decision_from_json(j)) return d;
    }
    auto open = reply.find('{');
    auto close = reply.rfind('}');
    if (open != std::string_view::npos && close != std::string_view::npos && close > open) {
        auto inner = nlohmann::json::parse(reply.substr(open, close - open + 1), nullptr, false);
        if (!inner.is_discarded()) {
            if (auto d = decision_from_json(inner)) return d;
        }
    }
    std::size_t b = reply.find_first_not_of(" \t\r\n\"'*");
    if (b == std::string_view::npos) return std::nullopt;
    std::size_t e = b;
    while (e < reply.size() && std::isalpha(static_cast<unsigned char>(reply[e]))) ++e;
    auto accept = yes_no(std::string(reply.substr(b, e - b)));
    if (!accept) return std::nullopt;
    std::string rest(reply.substr(e));
    std::size_t rb = rest.find_first_not_of(" \t\r\n.,:;-");
    return ClassifierDecision{*accept, rb == std::string::npos ? std::string{} : rest.substr(rb)};
}

StageOutput stage_comment_filter(std::vector<Candidate> cands, std::uint64_t threshold) {
    StageOutput out;
    for (auto& c : cands) {
        const bool keep = c.comment_count > threshold;
        std::string why = std::to_string(c.comment_count) + (keep ? " > " : " <= ") + std::to_string(threshold) +
                          " comments";
        place(out, std::move(c), "comment", keep ? StageVerdict::kept : StageVerdict::rejected, std::move(why));
    }
    return out;
}

StageOutput stage_llm_filter(std::vector<Candidate> cands, ModelBackend& classifier, const TemplateSet& templates,
                             const ClassifierConfig& cfg) {
    return run_classifier_stage(std::move(cands), "llm", classifier, cfg, [&](const Candidate& c) {
        ChatRequest req;
        req.user = render_template(templates.get("filter_llm"),
                                   {{"intro", c.intro}, {"asr", c.asr}, {"comments", join_comments(c.comments)}});
        return req;
    });
}

StageOutput stage_mllm_verify(std::vector<Candidate> cands, ModelBackend& verifier, const TemplateSet& templates,
                              const ClassifierConfig& cfg) {
    return run_classifier_stage(std::move(cands), "mllm", verifier, cfg, [&](const Candidate& c) {
        std::string analysis = "(no prior analysis)";
        for (auto it = c.stage_trace.rbegin(); it != c.stage_trace.rend(); ++it) {
            if (it->stage == "llm") {
                analysis = it->rationale;
                break;
            }
        }
        ChatRequest req;
        req.user = render_template(templates.get("filter_mllm"), {{"intro", c.intro},
                                                                   {"asr", c.asr},
                                                                   {"comments", join_comments(c.comments)},
                                                                   {"analysis", analysis}});
        if (c.frame_paths.empty()) throw InputError("candidate " + c.item_id + " has no frames for verification");
        for (std::size_t i : evenly_spaced(c.frame_paths.size(), cfg.max_frames)) {
            req.images.push_back(load_image(c.frame_paths[i]));
        }
        return req;
    });
}

VoteTable load_votes(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open votes file " + path.string());
    try {
        auto j = nlohmann::json::parse(in);
        if (!j.is_object()) throw InputError("votes file must map item_id -> [bool, bool, bool]");
        return j.get<VoteTable>();
    } catch (const nlohmann::json::exception& e) {
        throw InputError("votes file " + path.string() + ": " + e.what());
    }
}

StageOutput stage_human_veto(std::vector<Candidate> cands, const VoteTable& votes) {
    for (const auto& c : cands) {
        auto it = votes.find(c.item_id);
        if (it == votes.end()) throw InputError("no annotator votes for candidate " + c.item_id);
        if (it->second.size() != 3) {
            throw InputError("candidate " + c.item_id + " needs exactly 3 votes, got " +
                             std::to_string(it->second.size()));
        }
    }
    StageOutput out;
    for (auto& c : cands) {
        const auto& v = votes.at(c.item_id);
        const auto accepts = std::count(v.begin(), v.end(), true);
        const bool keep = accepts == 3;
        place(out, std::move(c), "human", keep ? StageVerdict::kept : StageVerdict::rejected,
              std::to_string(accepts) + "/3 annotators accept");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Funnel
// ---------------------------------------------------------------------------

nlohmann::json to_json(const FunnelResult& result) {
    return {{"stages", result.reports},
            {"survivors", result.survivors.size()},
            {"rejected", result.rejected.size()},
            {"needs_review", result.needs_review.size()},
            {"warnings", result.warnings}};
}

void validate_stages(const FunnelStages& stages) {
    std::set<std::string> seen;
    for (const auto& s : stages.order) {
        if (s != "comment" && s != "llm" && s != "mllm" && s != "human") {
            throw InputError("unknown filtration stage '" + s + "' (expected comment, llm, mllm, human)");
        }
        if (!seen.insert(s).second) throw InputError("stage '" + s + "' listed twice");
        if (s == "llm" && stages.classifier == nullptr) throw InputError("stage llm needs a classifier backend");
        if (s == "mllm" && stages.verifier == nullptr) throw InputError("stage mllm needs a verifier backend");
        if (s == "human" && stages.votes == nullptr) throw InputError("stage human needs a votes file");
    }
}

namespace {

std::set<std::string> ids_of(const std::vector<Candidate>& cands) {
    std::set<std::string> ids;
    for (const auto& c : cands) ids.insert(c.item_id);
    return ids;
}

}  // namespace

FunnelResult run_funnel(std::vector<Candidate> cands, const FunnelStages& stages, const TemplateSet& templates) {
    validate_stages(stages);
    const auto input_ids = ids_of(cands);
    if (input_ids.size() != cands.size()) throw InputError("candidate item_ids must be unique");

    FunnelResult result;
    for (const auto& stage : stages.order) {
        const auto before = ids_of(cands);
        const std::size_t in = cands.size();
        StageOutput out;
        if (stage == "comment") out = stage_comment_filter(std::move(cands), stages.comment_threshold);
        else if (stage == "llm") out = stage_llm_filter(std::move(cands), *stages.classifier, templates, stages.classifier_cfg);
        else if (stage == "mllm") out = stage_mllm_verify(std::move(cands), *stages.verifier, templates, stages.classifier_cfg);
        else out = stage_human_veto(std::move(cands), *stages.votes);

        for (const auto& c : out.kept) {
            if (!before.contains(c.item_id)) throw InvariantError("stage " + stage + " produced unknown item " + c.item_id);
        }
        if (out.kept.size() + out.rejected.size() + out.needs_review.size() != in) {
            throw InvariantError("stage " + stage + " lost or duplicated candidates");
        }
        result.reports.push_back({stage, in, out.kept.size(), out.rejected.size(), out.needs_review.size()});
        for (auto& c : out.rejected) result.rejected.push_back(std::move(c));
        for (auto& c : out.needs_review) result.needs_review.push_back(std::move(c));
        cands = std::move(out.kept);
    }
    result.survivors = std::move(cands);

    std::multiset<std::string> seen;
    for (const auto* bucket : {&result.survivors, &result.rejected, &result.needs_review}) {
        for (const auto& c : *bucket) seen.insert(c.item_id);
    }
    if (seen.size() != input_ids.size() || std::set<std::string>(seen.begin(), seen.end()) != input_ids) {
        throw InvariantError("funnel trace incomplete: every candidate must end in exactly one bucket");
    }

    std::map<MetaphorType, std::size_t> type_counts;
    for (const auto& c : result.survivors) {
        if (c.metaphor_type) ++type_counts[*c.metaphor_type];
    }
    if (!type_counts.empty()) result.warnings = balance_warnings(type_counts);
    return result;
}

}  // namespace metakg
