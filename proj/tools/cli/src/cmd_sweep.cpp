#include <ostream>

#include <spdlog/spdlog.h>

#include "common.hpp"
#include "metakg/error.hpp"
#include "metakg/graph_io.hpp"

namespace metakg::cli {
namespace {

namespace fs = std::filesystem;

struct Cell {
    int h = 0;
    int z = 0;
    QueryMode mode = QueryMode::ranked;

    [[nodiscard]] std::string name() const {
        return "h" + std::to_string(h) + "_z" + std::to_string(z) + "_" + std::string(query_mode_name(mode));
    }
};

class SweepCommand final : public Command {
public:
    CLI::App* attach(CLI::App& root) override {
        auto* sub = root.add_subcommand("sweep", "Run boost (and optionally eval) over the h x z x mode grid");
        sub->add_option("-i,--items", items_, "Items (JSON Lines)");
        sub->add_option("-g,--graph", graph_, "Graph file");
        sub->add_option("-b,--backend", backend_, "Backend name or mock:<fixture.json>");
        sub->add_option("-r,--records", records_, "Benchmark records; enables judging when a judge is set");
        sub->add_option("--judge", judge_, "Judge backend name or mock:<fixture.json>");
        sub->add_option("--seed", seed_, "Seed for random-mode cells");
        sub->add_option("-o,--out-dir", out_dir_, "One sub-directory per cell is written here");
        return sub;
    }

    int execute(Context& ctx) override {
        const Config& cfg = ctx.config;
        const fs::path out_dir = pick_path(out_dir_, cfg.paths.output_dir, "output directory (--out-dir or paths.output_dir)");
        const auto items = load_items(pick_path(items_, cfg.paths.items, "items file (--items or paths.items)"));
        const MetaphorGraph graph = load_graph(pick_path(graph_, cfg.paths.graph, "graph file (--graph or paths.graph)"));
        auto backend = make_backend(pick_name(backend_, cfg.boost.backend, "backend (--backend or boost.backend)"), cfg);
        const std::uint64_t seed = seed_.value_or(cfg.sweep.seed);

        std::optional<ResolvedBackend> judge_backend;
        std::vector<BenchmarkRecord> records;
        const std::string judge_name = judge_.value_or(cfg.judge.backend);
        const fs::path records_path = records_.value_or(cfg.paths.records);
        if (!judge_name.empty() && !records_path.empty()) {
            judge_backend = make_backend(judge_name, cfg);
            records = load_records(records_path);
        }

        std::vector<Cell> cells;
        for (int h : cfg.sweep.h) {
            for (int z : cfg.sweep.z) {
                for (QueryMode m : cfg.sweep.modes) cells.push_back({h, z, m});
            }
        }

        if (ctx.dry_run) {
            nlohmann::json names = nlohmann::json::array();
            for (const auto& c : cells) names.push_back(c.name());
            std::vector<std::string> stages{"boost"};
            if (judge_backend) stages.insert(stages.end(), {"judge", "aggregate"});
            nlohmann::json plan = {{"command", "sweep"}, {"dry_run", true},       {"cells", names},
                                   {"stages", stages},   {"items", items.size()}, {"seed", seed}};
            ctx.out << plan.dump(2) << '\n';
            return 0;
        }

        nlohmann::json summary = nlohmann::json::array();
        std::vector<ScoreReport> reports;
        for (const auto& cell : cells) {
            BoostConfig bc = boost_config(cfg);
            bc.query.h = cell.h;
            bc.query.z = cell.z;
            bc.query.mode = cell.mode;
            bc.query.seed = seed;
            const auto outputs = run_batch(items, RunMode::boost, &graph, *backend.backend, ctx.templates, bc,
                                           backend.max_parallel);

            const fs::path cell_dir = out_dir / cell.name();
            {
                auto out = open_output(cell_dir / "outputs.jsonl");
                for (const auto& o : outputs) out << nlohmann::json(o).dump() << '\n';
            }
            std::size_t ok = 0;
            std::size_t retrieved = 0;
            for (const auto& o : outputs) {
                if (!o.ok) continue;
                ++ok;
                if (o.retrieval) retrieved += o.retrieval->entries.size();
            }
            nlohmann::json report = {{"cell", cell.name()},
                                     {"query", bc.query},
                                     {"params", {{"h", cell.h}, {"z", cell.z}, {"temperature", bc.temperature}}},
                                     {"items", outputs.size()},
                                     {"ok", ok},
                                     {"failed", outputs.size() - ok},
                                     {"retrieved_concepts", retrieved}};
            if (judge_backend) {
                JudgeConfig jc;
                jc.temperature = cfg.judge.temperature;
                jc.retry = cfg.retry;
                JudgeRun run = judge_outputs(outputs, records, *judge_backend->backend, ctx.templates, jc,
                                             judge_backend->max_parallel);
                ScoreReport scored = score(cell.name(), run, records);
                report["score"] = to_json(scored);
                reports.push_back(std::move(scored));
            }
            write_json(cell_dir / "report.json", report);
            spdlog::info("sweep cell {}: {} ok of {}", cell.name(), ok, outputs.size());
            summary.push_back(std::move(report));
        }

        nlohmann::json result = {{"cells", summary}, {"seed", seed}};
        if (!reports.empty()) {
            const std::string table = render_score_table(reports);
            write_text(out_dir / "table.txt", table);
            result["table"] = table;
        }
        write_json(out_dir / "sweep.json", result);
        ctx.out << result.dump(2) << '\n';
        return 0;
    }

private:
    std::optional<fs::path> items_;
    std::optional<fs::path> graph_;
    std::optional<std::string> backend_;
    std::optional<fs::path> records_;
    std::optional<std::string> judge_;
    std::optional<std::uint64_t> seed_;
    std::optional<fs::path> out_dir_;
};

}  // namespace

std::unique_ptr<Command> make_sweep_command() { return std::make_unique<SweepCommand>(); }

}  // namespace metakg::cli
