#include <ostream>

#include "common.hpp"
#include "metakg/error.hpp"
#include "metakg/graph_io.hpp"

namespace metakg::cli {
namespace {

namespace fs = std::filesystem;

class QueryCommand final : public Command {
public:
    CLI::App* attach(CLI::App& root) override {
        auto* sub = root.add_subcommand("query", "Top-z common-connection query; prints the result as JSON");
        sub->add_option("-g,--graph", graph_, "Graph file");
        sub->add_option("keywords", keywords_, "Query keywords");
        sub->add_option("--h", h_, "Hop radius (>= 1)");
        sub->add_option("--z", z_, "Maximum entries (>= 0)");
        sub->add_option("--mode", mode_, "ranked or random")->check(CLI::IsMember({"ranked", "random"}));
        sub->add_option("--seed", seed_, "Seed for random mode");
        sub->add_flag("--token-fallback,!--no-token-fallback", fallback_, "Match keywords by shared tokens");
        return sub;
    }

    int execute(Context& ctx) override {
        const Config& cfg = ctx.config;
        QueryParams params;
        params.h = h_.value_or(cfg.kg.h);
        params.z = z_.value_or(cfg.kg.z);
        params.mode = mode_ ? *parse_query_mode(*mode_) : cfg.kg.mode;
        params.seed = seed_.value_or(cfg.kg.seed);
        params.match.token_fallback = fallback_.value_or(cfg.kg.token_fallback);
        if (params.h < 1) throw InputError("--h must be >= 1");
        if (params.z < 0) throw InputError("--z must be >= 0");

        const fs::path path = pick_path(graph_, cfg.paths.graph, "graph file (--graph or paths.graph)");
        const MetaphorGraph graph = load_graph(path);

        if (ctx.dry_run) {
            nlohmann::json plan = {{"command", "query"},
                                   {"dry_run", true},
                                   {"stages", {"load_graph", "match_keywords", "hop_ball", "select"}},
                                   {"params", params},
                                   {"keywords", keywords_},
                                   {"graph", {{"path", path.string()}, {"nodes", graph.node_count()}}}};
            ctx.out << plan.dump(2) << '\n';
            return 0;
        }
        const RetrievalResult result = query_common_connection(graph, keywords_, params);
        ctx.out << nlohmann::json(result).dump(2) << '\n';
        return 0;
    }

private:
    std::optional<fs::path> graph_;
    std::vector<std::string> keywords_;
    std::optional<int> h_;
    std::optional<int> z_;
    std::optional<std::string> mode_;
    std::optional<std::uint64_t> seed_;
    std::optional<bool> fallback_;
};

}  // namespace

std::unique_ptr<Command> make_query_command() { return std::make_unique<QueryCommand>(); }

}  // namespace metakg::cli
