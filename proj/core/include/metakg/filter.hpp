#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "metakg/backend.hpp"
#include "metakg/taxonomy.hpp"
#include "metakg/templates.hpp"

namespace metakg {

enum class StageVerdict { kept, rejected, needs_review };

std::string_view stage_verdict_name(StageVerdict v) noexcept;

struct TraceEntry {
    std::string stage;
    StageVerdict verdict = StageVerdict::kept;
    std::string rationale;
};

struct Candidate {
    std::string item_id;
    std::uint64_t comment_count = 0;
    std::string intro;
    std::string asr;
    std::vector<std::string> comments;
    std::vector<std::filesystem::path> frame_paths;
    std::optional<MetaphorType> metaphor_type;
    std::vector<TraceEntry> stage_trace;
};

void to_json(nlohmann::json& j, const Candidate& c);
void from_json(const nlohmann::json& j, Candidate& c);

std::vector<Candidate> load_candidates(const std::filesystem::path& path);

/// Partition of a stage's input. Every input lands in exactly one bucket
/// with one new trace entry.
struct StageOutput {
    std::vector<Candidate> kept;
    std::vector<Candidate> rejected;
    std::vector<Candidate> needs_review;
};

struct StageReport {
    std::string stage;
    std::size_t in = 0;
    std::size_t kept = 0;
    std::size_t rejected = 0;
    std::size_t needs_review = 0;
};

void to_json(nlohmann::json& j, const StageReport& r);
void from_json(const nlohmann::json& j, StageReport& r);

inline constexpr std::uint64_t kDefaultCommentThreshold = 150;

/// Keeps candidates with strictly more than `threshold` comments.
StageOutput stage_comment_filter(std::vector<Candidate> cands, std::uint64_t threshold = kDefaultCommentThreshold);

struct ClassifierConfig {
    double temperature = 0.0;
    RetryPolicy retry;
    std::size_t max_parallel = 1;
    std::size_t max_frames = 16;
};

struct ClassifierDecision {
    bool accept = false;
    std::string rationale;
};

/// {"verdict": "yes"|"no", "rationale": ...} (possibly wrapped in prose), or
/// a reply whose first word is yes/no.
std::optional<ClassifierDecision> parse_classifier_reply(std::string_view reply);

/// Text-only screen over intro, transcript and comments.
StageOutput stage_llm_filter(std::vector<Candidate> cands, ModelBackend& classifier, const TemplateSet& templates,
                             const ClassifierConfig& cfg = {});

/// Frame-grounded check of the text-only analysis. Rejection here is final.
StageOutput stage_mllm_verify(std::vector<Candidate> cands, ModelBackend& verifier, const TemplateSet& templates,
                              const ClassifierConfig& cfg = {});

using VoteTable = std::map<std::string, std::vector<bool>>;

VoteTable load_votes(const std::filesystem::path& path);

/// Keeps a candidate only when all three annotators accept. Missing votes
/// or a vote count other than 3 is an InputError.
StageOutput stage_human_veto(std::vector<Candidate> cands, const VoteTable& votes);

struct FunnelStages {
    std::vector<std::string> order;  ///< subset of {comment, llm, mllm, human}, in run order
    std::uint64_t comment_threshold = kDefaultCommentThreshold;
    ModelBackend* classifier = nullptr;
    ModelBackend* verifier = nullptr;
    const VoteTable* votes = nullptr;
    ClassifierConfig classifier_cfg;
};

struct FunnelResult {
    std::vector<Candidate> survivors;
    std::vector<Candidate> rejected;
    std::vector<Candidate> needs_review;
    std::vector<StageReport> reports;
    std::vector<std::string> warnings;
};

nlohmann::json to_json(const FunnelResult& result);

/// Validates the stage list (names, required clients) without running it.
void validate_stages(const FunnelStages& stages);

/// Runs stages in order. Checks after each stage that output is a subset of
/// input, and at the end that every input is in exactly one of survivors,
/// rejected, needs_review; violations throw InvariantError.
FunnelResult run_funnel(std::vector<Candidate> cands, const FunnelStages& stages, const TemplateSet& templates);

}  // namespace metakg
