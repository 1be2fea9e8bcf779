#include "common.hpp"

#include <fstream>
#include <map>

#include "metakg/error.hpp"
#include "metakg/parallel.hpp"

namespace metakg::cli {

namespace fs = std::filesystem;

fs::path pick_path(const std::optional<fs::path>& flag, const fs::path& fallback, std::string_view what) {
    if (flag && !flag->empty()) return *flag;
    if (!fallback.empty()) return fallback;
    throw InputError("missing " + std::string(what));
}

std::string pick_name(const std::optional<std::string>& flag, const std::string& fallback, std::string_view what) {
    if (flag && !flag->empty()) return *flag;
    if (!fallback.empty()) return fallback;
    throw InputError("missing " + std::string(what));
}

void require_file(const fs::path& path, std::string_view what) {
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) throw InputError(std::string(what) + " not found: " + path.string());
}

std::vector<nlohmann::json> read_jsonl(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    std::vector<nlohmann::json> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw InputError(path.string() + " line " + std::to_string(line_no) + ": not a JSON object");
        }
        rows.push_back(std::move(j));
    }
    return rows;
}

std::ofstream open_output(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path.string());
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    auto out = open_output(path);
    out << text;
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

BoostConfig boost_config(const Config& config) {
    BoostConfig cfg;
    cfg.query.h = config.kg.h;
    cfg.query.z = config.kg.z;
    cfg.query.mode = config.kg.mode;
    cfg.query.seed = config.kg.seed;
    cfg.query.match.token_fallback = config.kg.token_fallback;
    cfg.temperature = config.boost.temperature;
    cfg.max_frames = config.boost.max_frames;
    cfg.retry = config.retry;
    return cfg;
}

JudgeRun judge_outputs(const std::vector<BoostOutput>& outputs, const std::vector<BenchmarkRecord>& records,
                       ModelBackend& judge_backend, const TemplateSet& templates, const JudgeConfig& cfg,
                       std::size_t max_parallel) {
    std::map<std::string, const BenchmarkRecord*> by_id;
    for (const auto& r : records) by_id[r.item_id] = &r;
    std::vector<const BenchmarkRecord*> matched;
    matched.reserve(outputs.size());
    for (const auto& o : outputs) {
        auto it = by_id.find(o.item_id);
        if (it == by_id.end()) throw InputError("output for unknown item " + o.item_id);
        matched.push_back(it->second);
    }

    auto outcomes = parallel_map(outputs.size(), max_parallel, [&](std::size_t i) {
        const std::string candidate = outputs[i].ok ? outputs[i].interpretation : std::string{};
        return judge(*matched[i], candidate, judge_backend, templates, cfg);
    });

    JudgeRun run;
    for (auto& o : outcomes) {
        if (auto* v = std::get_if<JudgeVerdict>(&o)) run.verdicts.push_back(std::move(*v));
        else run.failures.push_back(std::get<JudgeFailure>(std::move(o)));
    }
    return run;
}

ScoreReport score(const std::string& label, const JudgeRun& run, const std::vector<BenchmarkRecord>& records) {
    ScoreReport report = aggregate(run.verdicts, records);
    report.label = label;
    report.failed = run.failures.size();
    return report;
}

}  // namespace metakg::cli
