#include <fstream>
#include <ostream>

#include <spdlog/spdlog.h>

#include "common.hpp"
#include "metakg/error.hpp"
#include "metakg/graph_io.hpp"

namespace metakg::cli {
namespace {

namespace fs = std::filesystem;

class BoostCommand final : public Command {
public:
    CLI::App* attach(CLI::App& root) override {
        auto* sub = root.add_subcommand("boost", "Run identify -> query -> generate (or the baseline) over items");
        sub->add_option("-i,--items", items_, "Items as JSON Lines {item_id, title, frames}");
        sub->add_option("-g,--graph", graph_, "Graph file");
        sub->add_option("-b,--backend", backend_, "Backend name or mock:<fixture.json>");
        sub->add_flag("--baseline", baseline_, "Interpret from frames and title only");
        sub->add_option("-o,--out", out_, "Write outputs here instead of stdout");
        sub->add_option("--h", h_, "Hop radius (>= 1)");
        sub->add_option("--z", z_, "Retained concepts (>= 0)");
        sub->add_option("--mode", mode_, "ranked or random")->check(CLI::IsMember({"ranked", "random"}));
        sub->add_option("--seed", seed_, "Seed for random mode");
        sub->add_option("--temperature", temperature_, "Sampling temperature")->check(CLI::Range(0.0, 2.0));
        sub->add_option("--max-frames", max_frames_, "Frames sent per item")->check(CLI::PositiveNumber);
        sub->add_option("--replay", replay_,
                        "Re-run the query stage on recorded outputs and check the retrievals match");
        return sub;
    }

    int execute(Context& ctx) override {
        const Config& cfg = ctx.config;
        BoostConfig bc = boost_config(cfg);
        if (h_) bc.query.h = *h_;
        if (z_) bc.query.z = *z_;
        if (mode_) bc.query.mode = *parse_query_mode(*mode_);
        if (seed_) bc.query.seed = *seed_;
        if (temperature_) bc.temperature = *temperature_;
        if (max_frames_) bc.max_frames = *max_frames_;
        if (bc.query.h < 1) throw InputError("--h must be >= 1");
        if (bc.query.z < 0) throw InputError("--z must be >= 0");

        if (replay_) return replay(ctx);

        const RunMode mode = baseline_ ? RunMode::baseline : RunMode::boost;
        const fs::path items_path = pick_path(items_, cfg.paths.items, "items file (--items or paths.items)");
        const auto items = load_items(items_path);
        std::optional<MetaphorGraph> graph;
        if (mode == RunMode::boost) {
            graph.emplace(load_graph(pick_path(graph_, cfg.paths.graph, "graph file (--graph or paths.graph)")));
        }
        auto resolved = make_backend(pick_name(backend_, cfg.boost.backend, "backend (--backend or boost.backend)"), cfg);

        if (ctx.dry_run) {
            for (const auto& item : items) {
                for (const auto& f : item.frame_paths) require_file(f, "frame of " + item.item_id);
            }
            nlohmann::json stages = mode == RunMode::boost
                                        ? nlohmann::json{"load_frames", "identify", "query", "generate"}
                                        : nlohmann::json{"load_frames", "generate"};
            nlohmann::json plan = {{"command", "boost"},
                                   {"dry_run", true},
                                   {"mode", run_mode_name(mode)},
                                   {"stages", stages},
                                   {"items", items.size()},
                                   {"backend", resolved.backend->id()},
                                   {"params", {{"h", bc.query.h}, {"z", bc.query.z}, {"temperature", bc.temperature}}},
                                   {"query", bc.query},
                                   {"max_frames", bc.max_frames},
                                   {"max_parallel", resolved.max_parallel}};
            ctx.out << plan.dump(2) << '\n';
            return 0;
        }

        std::ofstream file;
        if (out_) file = open_output(*out_);
        std::ostream& sink = out_ ? static_cast<std::ostream&>(file) : ctx.out;

        std::size_t ok = 0;
        std::size_t failed = 0;
        std::size_t frame_failures = 0;
        const std::size_t chunk = std::max<std::size_t>(resolved.max_parallel, 1);
        for (std::size_t first = 0; first < items.size(); first += chunk) {
            std::vector<MediaItem> slice(items.begin() + static_cast<std::ptrdiff_t>(first),
                                         items.begin() + static_cast<std::ptrdiff_t>(std::min(first + chunk, items.size())));
            auto outputs = run_batch(slice, mode, graph ? &*graph : nullptr, *resolved.backend, ctx.templates, bc,
                                     resolved.max_parallel);
            for (const auto& o : outputs) {
                if (o.ok) {
                    ++ok;
                } else {
                    ++failed;
                    if (o.failed_stage == "frames") ++frame_failures;
                    spdlog::warn("{} failed at {}: {}", o.item_id, o.failed_stage, o.error);
                }
                sink << nlohmann::json(o).dump() << '\n';
            }
            sink.flush();
        }

        nlohmann::json summary = {{"summary", {{"items", items.size()}, {"ok", ok}, {"failed", failed}}}};
        spdlog::info("boost: {} ok, {} failed", ok, failed);
        if (out_) ctx.out << summary.dump() << '\n';
        if (!items.empty() && ok == 0) return frame_failures == failed ? kExitInput : kExitBackend;
        return 0;
    }

private:
    int replay(Context& ctx) {
        const fs::path graph_path = pick_path(graph_, ctx.config.paths.graph, "graph file (--graph or paths.graph)");
        const MetaphorGraph graph = load_graph(graph_path);
        std::size_t replayed = 0;
        nlohmann::json mismatches = nlohmann::json::array();
        for (const auto& row : read_jsonl(*replay_)) {
            BoostOutput recorded = row.get<BoostOutput>();
            if (recorded.mode != RunMode::boost || !recorded.retrieval) continue;
            ++replayed;
            if (!(replay_retrieval(graph, recorded) == *recorded.retrieval)) mismatches.push_back(recorded.item_id);
        }
        nlohmann::json report = {{"replayed", replayed}, {"mismatches", mismatches}};
        ctx.out << report.dump(2) << '\n';
        if (!mismatches.empty()) {
            spdlog::error("{} recorded retrievals differ from replay", mismatches.size());
            return kExitInvariant;
        }
        return 0;
    }

    std::optional<fs::path> items_;
    std::optional<fs::path> graph_;
    std::optional<std::string> backend_;
    bool baseline_ = false;
    std::optional<fs::path> out_;
    std::optional<int> h_;
    std::optional<int> z_;
    std::optional<std::string> mode_;
    std::optional<std::uint64_t> seed_;
    std::optional<double> temperature_;
    std::optional<std::size_t> max_frames_;
    std::optional<fs::path> replay_;
};

}  // namespace

std::unique_ptr<Command> make_boost_command() { return std::make_unique<BoostCommand>(); }

}  // namespace metakg::cli
