#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "metakg/boost.hpp"
#include "metakg/cli/app.hpp"
#include "metakg/cli/config.hpp"
#include "metakg/eval.hpp"
#include "metakg/templates.hpp"

namespace metakg::cli {

struct Context {
    Config config;
    TemplateSet templates;
    bool dry_run = false;
    std::ostream& out;
    std::ostream& err;
};

class Command {
public:
    virtual ~Command() = default;
    virtual CLI::App* attach(CLI::App& root) = 0;
    virtual int execute(Context& ctx) = 0;
};

std::unique_ptr<Command> make_build_command();
std::unique_ptr<Command> make_query_command();
std::unique_ptr<Command> make_boost_command();
std::unique_ptr<Command> make_eval_command();
std::unique_ptr<Command> make_filter_command();
std::unique_ptr<Command> make_sweep_command();

/// First of `flag` and `fallback` that is set; InputError naming `what` when neither is.
std::filesystem::path pick_path(const std::optional<std::filesystem::path>& flag,
                                const std::filesystem::path& fallback, std::string_view what);
std::string pick_name(const std::optional<std::string>& flag, const std::string& fallback, std::string_view what);

void require_file(const std::filesystem::path& path, std::string_view what);

/// Parses every non-blank line as a JSON object.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

/// Opens `path` for writing, creating parent directories.
std::ofstream open_output(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// Default retrieval and generation settings from the config.
BoostConfig boost_config(const Config& config);

/// Judges each output against its record; outputs whose item_id has no
/// record are an InputError. Records without an output are left out.
struct JudgeRun {
    std::vector<JudgeVerdict> verdicts;
    std::vector<JudgeFailure> failures;
};
JudgeRun judge_outputs(const std::vector<BoostOutput>& outputs, const std::vector<BenchmarkRecord>& records,
                       ModelBackend& judge_backend, const TemplateSet& templates, const JudgeConfig& cfg,
                       std::size_t max_parallel);

/// aggregate() plus the failure count and metadata.
ScoreReport score(const std::string& label, const JudgeRun& run, const std::vector<BenchmarkRecord>& records);

}  // namespace metakg::cli
