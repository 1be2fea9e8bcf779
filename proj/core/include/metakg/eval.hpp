#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "metakg/backend.hpp"
#include "metakg/taxonomy.hpp"
#include "metakg/templates.hpp"

namespace metakg {

struct BenchmarkRecord {
    std::string item_id;
    std::string title;
    MetaphorType metaphor_type = MetaphorType::body_language;
    std::string golden_interpretation;
    double duration_s = 0.0;
    std::vector<std::filesystem::path> frame_paths;
};

/// Source field names for each record attribute.
struct RecordFieldMap {
    std::string item_id = "item_id";
    std::string title = "title";
    std::string metaphor_type = "metaphor_type";
    std::string golden = "golden_interpretation";
    std::string duration = "duration_s";
    std::string frames = "frames";

    static RecordFieldMap from_json(const nlohmann::json& j);
};

std::vector<BenchmarkRecord> load_records(const std::filesystem::path& path, const RecordFieldMap& fields = {});

struct JudgeVerdict {
    std::string item_id;
    int raw_score = 0;  ///< 0..10
    int scaled = 0;     ///< 10 * raw_score
    std::string rationale;
    std::string judge_backend;
};

struct JudgeFailure {
    std::string item_id;
    std::string reason;
    std::string raw_reply;
};

using JudgeOutcome = std::variant<JudgeVerdict, JudgeFailure>;

void to_json(nlohmann::json& j, const JudgeVerdict& v);
void from_json(const nlohmann::json& j, JudgeVerdict& v);
void to_json(nlohmann::json& j, const JudgeFailure& f);

/// The integer the judge committed to: the last "score: N" (any case,
/// ':' or '=' optional), otherwise the only integer in the reply. Values
/// are returned even when out of range so callers can reject them.
std::optional<int> parse_judge_score(std::string_view reply);

/// Builds a verdict from a raw score, or nullopt when outside 0..10.
std::optional<JudgeVerdict> make_verdict(std::string item_id, int raw, std::string rationale, std::string backend);

struct JudgeConfig {
    double temperature = 0.0;
    RetryPolicy retry;
};

/// Scores `candidate` against the record's golden interpretation. A reply
/// without a valid 0..10 integer gets one repair request; if that also fails
/// the outcome is a JudgeFailure, never a score.
JudgeOutcome judge(const BenchmarkRecord& record, std::string_view candidate, ModelBackend& backend,
                   const TemplateSet& templates, const JudgeConfig& cfg = {});

struct TypeScore {
    std::size_t n = 0;
    double mean = 0.0;
};

struct ScoreReport {
    std::string label;  ///< row name, e.g. "boost (qwen)"
    std::map<MetaphorType, TypeScore> per_type;
    std::size_t total = 0;
    double micro_mean = 0.0;
    double macro_mean = 0.0;
    std::size_t failed = 0;
    nlohmann::json metadata = nlohmann::json::object();
};

/// Per-type means of scaled scores; micro = sample-weighted, macro = mean of
/// the per-type means over types with at least one verdict. Throws
/// InputError for a verdict whose item_id has no record, or duplicates.
ScoreReport aggregate(std::span<const JudgeVerdict> verdicts, std::span<const BenchmarkRecord> records);

nlohmann::json to_json(const ScoreReport& report);

struct ReportOptions {
    /// An externally published average to compare against; its gap to the
    /// computed means is written in the footer.
    std::optional<double> reference_average;
    std::vector<std::string> extra_notes;
};

/// Aligned-column table: Method | 8 type columns | Micro | Macro, one score
/// row and one count row per report, followed by footer notes.
std::string render_score_table(std::span<const ScoreReport> reports, const ReportOptions& options = {});

/// Warnings for per-type counts more than 2x above or below the median.
std::vector<std::string> balance_warnings(const std::map<MetaphorType, std::size_t>& counts);

/// Sample Pearson correlation. Throws InputError on length mismatch,
/// fewer than 2 points, or zero variance ("undefined correlation").
double pearson(std::span<const double> xs, std::span<const double> ys);

enum class Deficiency { wrong_recognition, missing_mapping, superficial_mapping, improper_mapping };

std::string_view deficiency_id(Deficiency d) noexcept;
std::string_view deficiency_name(Deficiency d) noexcept;
std::optional<Deficiency> parse_deficiency(std::string_view text);

struct DeficiencyAnnotation {
    std::string item_id;
    Deficiency category;
};

/// Share of annotations per category; empty input gives an empty map.
std::map<Deficiency, double> tally_deficiencies(std::span<const DeficiencyAnnotation> annotations);

std::string render_deficiency_table(const std::string& label, const std::map<Deficiency, double>& proportions);

}  // namespace metakg
