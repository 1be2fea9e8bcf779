#include <fstream>
#include <map>
#include <ostream>

#include <spdlog/spdlog.h>

#include "common.hpp"
#include "metakg/error.hpp"

namespace metakg::cli {
namespace {

namespace fs = std::filesystem;

std::vector<BoostOutput> read_outputs(const fs::path& path) {
    std::vector<BoostOutput> outputs;
    for (const auto& row : read_jsonl(path)) outputs.push_back(row.get<BoostOutput>());
    return outputs;
}

std::vector<JudgeVerdict> read_verdicts(const fs::path& path) {
    std::vector<JudgeVerdict> verdicts;
    for (const auto& row : read_jsonl(path)) verdicts.push_back(row.get<JudgeVerdict>());
    return verdicts;
}

nlohmann::json pearson_block(const fs::path& path, const std::vector<JudgeVerdict>& verdicts) {
    std::map<std::string, double> judge_scores;
    for (const auto& v : verdicts) judge_scores[v.item_id] = v.scaled;
    std::vector<double> human;
    std::vector<double> machine;
    std::size_t unmatched = 0;
    for (const auto& row : read_jsonl(path)) {
        const auto id = row.at("item_id").get<std::string>();
        auto it = judge_scores.find(id);
        if (it == judge_scores.end()) {
            ++unmatched;
            continue;
        }
        human.push_back(row.at("score").get<double>());
        machine.push_back(it->second);
    }
    if (unmatched > 0) spdlog::warn("{} human scores have no judge verdict", unmatched);
    return {{"n", human.size()}, {"unmatched", unmatched}, {"r", pearson(machine, human)}};
}

struct DeficiencyTables {
    nlohmann::json proportions = nlohmann::json::object();
    std::string text;
};

DeficiencyTables deficiency_block(const fs::path& path) {
    std::map<std::string, std::vector<DeficiencyAnnotation>> groups;
    for (const auto& row : read_jsonl(path)) {
        const auto raw = row.at("category").get<std::string>();
        auto cat = parse_deficiency(raw);
        if (!cat) throw InputError(path.string() + ": unknown deficiency category '" + raw + "'");
        groups[row.value("label", std::string("annotations"))].push_back({row.at("item_id").get<std::string>(), *cat});
    }
    DeficiencyTables out;
    for (const auto& [label, annotations] : groups) {
        const auto shares = tally_deficiencies(annotations);
        nlohmann::json row = nlohmann::json::object();
        for (const auto& [cat, share] : shares) row[std::string(deficiency_id(cat))] = share;
        out.proportions[label] = {{"n", annotations.size()}, {"proportions", std::move(row)}};
        out.text += render_deficiency_table(label, shares);
        out.text += '\n';
    }
    return out;
}

class EvalCommand final : public Command {
public:
    CLI::App* attach(CLI::App& root) override {
        auto* sub = root.add_subcommand("eval", "Judge outputs against golden interpretations and build the score table");
        sub->add_option("-r,--records", records_, "Benchmark records (JSON Lines)");
        sub->add_option("--fields", fields_, "JSON object mapping record attributes to source field names");
        sub->add_option("--results", results_, "Boost/baseline outputs to judge (one table row per file)");
        sub->add_option("--verdicts", verdicts_, "Already-judged verdicts (JSON Lines); skips judging");
        sub->add_option("--label", labels_, "Row label per --results/--verdicts input, in order");
        sub->add_option("--judge", judge_, "Judge backend name or mock:<fixture.json>");
        sub->add_option("--judge-temperature", judge_temperature_, "Judge temperature")->check(CLI::Range(0.0, 2.0));
        sub->add_option("--human-scores", human_, "JSON Lines {item_id, score} for judge/human correlation");
        sub->add_option("--deficiencies", deficiencies_, "JSON Lines {item_id, category, label?}");
        sub->add_option("--reference-average", reference_, "Published average to compare in the table footer");
        sub->add_option("-o,--out-dir", out_dir_, "Write report.json, table.txt and verdicts here");
        sub->add_flag("--table", table_only_, "Print the text table instead of JSON");
        return sub;
    }

    int execute(Context& ctx) override {
        const Config& cfg = ctx.config;
        const bool scoring = !results_.empty() || verdicts_;
        if (!scoring && !deficiencies_) {
            throw InputError("nothing to evaluate: pass --results, --verdicts or --deficiencies");
        }
        if (!labels_.empty() && labels_.size() != results_.size() + (verdicts_ ? 1 : 0)) {
            throw InputError("--label must be given once per --results/--verdicts input");
        }
        if (human_) {
            if (!scoring) throw InputError("--human-scores needs --results or --verdicts to correlate against");
            require_file(*human_, "human scores");
        }
        if (deficiencies_) require_file(*deficiencies_, "deficiency annotations");

        std::vector<BenchmarkRecord> records;
        if (scoring) {
            RecordFieldMap fields;
            if (fields_) {
                std::ifstream in(*fields_);
                if (!in) throw InputError("cannot open " + fields_->string());
                fields = RecordFieldMap::from_json(nlohmann::json::parse(in));
            }
            records = load_records(pick_path(records_, cfg.paths.records, "records (--records or paths.records)"), fields);
        }

        std::optional<ResolvedBackend> judge_backend;
        if (!results_.empty()) {
            judge_backend = make_backend(pick_name(judge_, cfg.judge.backend, "judge backend (--judge or judge.backend)"), cfg);
        }

        if (ctx.dry_run) {
            std::vector<std::string> stages{"load_records"};
            if (!results_.empty()) stages.push_back("judge");
            if (scoring) stages.insert(stages.end(), {"aggregate", "render"});
            if (human_) stages.push_back("pearson");
            if (deficiencies_) stages.push_back("deficiencies");
            for (const auto& r : results_) require_file(r, "results file");
            if (verdicts_) require_file(*verdicts_, "verdicts file");
            nlohmann::json plan = {{"command", "eval"},
                                   {"dry_run", true},
                                   {"stages", stages},
                                   {"records", records.size()},
                                   {"inputs", results_.size() + (verdicts_ ? 1 : 0)}};
            if (judge_backend) plan["judge"] = judge_backend->backend->id();
            ctx.out << plan.dump(2) << '\n';
            return 0;
        }

        JudgeConfig jc;
        jc.temperature = judge_temperature_.value_or(cfg.judge.temperature);
        jc.retry = cfg.retry;

        std::vector<ScoreReport> reports;
        std::vector<JudgeRun> runs;
        std::size_t label_index = 0;
        auto next_label = [&](const fs::path& path) {
            return label_index < labels_.size() ? labels_[label_index++] : path.stem().string();
        };
        for (const auto& path : results_) {
            const auto outputs = read_outputs(path);
            JudgeRun run = judge_outputs(outputs, records, *judge_backend->backend, ctx.templates, jc,
                                         judge_backend->max_parallel);
            for (const auto& f : run.failures) spdlog::warn("judge failed for {}: {}", f.item_id, f.reason);
            const std::string label = next_label(path);
            ScoreReport report = score(label, run, records);
            report.metadata["results"] = path.string();
            report.metadata["judge"] = judge_backend->backend->id();
            if (!outputs.empty()) {
                report.metadata["mode"] = run_mode_name(outputs.front().mode);
                report.metadata["backend"] = outputs.front().backend;
            }
            reports.push_back(std::move(report));
            runs.push_back(std::move(run));
        }
        if (verdicts_) {
            JudgeRun run{read_verdicts(*verdicts_), {}};
            ScoreReport report = score(next_label(*verdicts_), run, records);
            report.metadata["verdicts"] = verdicts_->string();
            reports.push_back(std::move(report));
            runs.push_back(std::move(run));
        }

        nlohmann::json result = nlohmann::json::object();
        std::string table;
        if (scoring) {
            ReportOptions ro;
            ro.reference_average = reference_;
            table = render_score_table(reports, ro);
            nlohmann::json rows = nlohmann::json::array();
            for (const auto& r : reports) rows.push_back(to_json(r));
            result["reports"] = std::move(rows);
            result["table"] = table;
        }
        if (human_) result["pearson"] = pearson_block(*human_, runs.front().verdicts);
        DeficiencyTables def;
        if (deficiencies_) {
            def = deficiency_block(*deficiencies_);
            result["deficiencies"] = def.proportions;
        }

        if (out_dir_) {
            write_json(*out_dir_ / "report.json", result);
            if (!table.empty()) write_text(*out_dir_ / "table.txt", table);
            if (!def.text.empty()) write_text(*out_dir_ / "deficiencies.txt", def.text);
            for (std::size_t i = 0; i < results_.size(); ++i) {
                auto out = open_output(*out_dir_ / "verdicts" / (reports[i].label + ".jsonl"));
                for (const auto& v : runs[i].verdicts) out << nlohmann::json(v).dump() << '\n';
                if (runs[i].failures.empty()) continue;
                auto failed = open_output(*out_dir_ / "failures" / (reports[i].label + ".jsonl"));
                for (const auto& f : runs[i].failures) failed << nlohmann::json(f).dump() << '\n';
            }
        }

        if (table_only_) ctx.out << table << def.text;
        else ctx.out << result.dump(2) << '\n';
        return 0;
    }

private:
    std::optional<fs::path> records_;
    std::optional<fs::path> fields_;
    std::vector<fs::path> results_;
    std::optional<fs::path> verdicts_;
    std::vector<std::string> labels_;
    std::optional<std::string> judge_;
    std::optional<double> judge_temperature_;
    std::optional<fs::path> human_;
    std::optional<fs::path> deficiencies_;
    std::optional<double> reference_;
    std::optional<fs::path> out_dir_;
    bool table_only_ = false;
};

}  // namespace

std::unique_ptr<Command> make_eval_command() { return std::make_unique<EvalCommand>(); }

}  // namespace metakg::cli
