#include <algorithm>
#include <ostream>

#include <spdlog/spdlog.h>

#include "common.hpp"
#include "metakg/error.hpp"
#include "metakg/filter.hpp"

namespace metakg::cli {
namespace {

namespace fs = std::filesystem;

void write_candidates(const fs::path& path, const std::vector<Candidate>& cands) {
    auto out = open_output(path);
    for (const auto& c : cands) out << nlohmann::json(c).dump() << '\n';
}

class FilterCommand final : public Command {
public:
    CLI::App* attach(CLI::App& root) override {
        auto* sub = root.add_subcommand("filter", "Run the candidate filtration funnel");
        sub->add_option("-i,--candidates", candidates_, "Candidates (JSON Lines)");
        sub->add_option("--stages", stages_, "Comma-separated subset of comment,llm,mllm,human in run order")
            ->delimiter(',');
        sub->add_option("--threshold", threshold_, "Comment-count threshold (kept when strictly above)");
        sub->add_option("--classifier", classifier_, "Backend for the text-only stage");
        sub->add_option("--verifier", verifier_, "Backend for the frame-grounded stage");
        sub->add_option("--votes", votes_, "JSON object item_id -> [bool, bool, bool]");
        sub->add_option("-o,--out-dir", out_dir_, "Write survivors, rejected, needs_review and report here");
        return sub;
    }

    int execute(Context& ctx) override {
        const Config& cfg = ctx.config;
        const fs::path cand_path =
            pick_path(candidates_, cfg.paths.candidates, "candidates file (--candidates or paths.candidates)");
        auto cands = load_candidates(cand_path);

        FunnelStages stages;
        stages.order = stages_.empty() ? cfg.filter.stages : stages_;
        stages.comment_threshold = threshold_.value_or(cfg.filter.comment_threshold);
        stages.classifier_cfg.temperature = cfg.filter.temperature;
        stages.classifier_cfg.retry = cfg.retry;
        stages.classifier_cfg.max_frames = cfg.boost.max_frames;

        auto uses = [&](std::string_view s) {
            return std::find(stages.order.begin(), stages.order.end(), s) != stages.order.end();
        };
        ResolvedBackend classifier;
        ResolvedBackend verifier;
        VoteTable votes;
        std::size_t parallel = 1;
        if (uses("llm")) {
            classifier = make_backend(pick_name(classifier_, cfg.filter.classifier, "classifier backend"), cfg);
            stages.classifier = classifier.backend.get();
            parallel = std::max(parallel, classifier.max_parallel);
        }
        if (uses("mllm")) {
            verifier = make_backend(pick_name(verifier_, cfg.filter.verifier, "verifier backend"), cfg);
            stages.verifier = verifier.backend.get();
            parallel = std::max(parallel, verifier.max_parallel);
        }
        if (uses("human")) {
            votes = load_votes(pick_path(votes_, cfg.paths.votes, "votes file (--votes or paths.votes)"));
            stages.votes = &votes;
        }
        stages.classifier_cfg.max_parallel = cfg.max_parallel.value_or(parallel);
        validate_stages(stages);

        if (ctx.dry_run) {
            nlohmann::json plan = {{"command", "filter"},
                                   {"dry_run", true},
                                   {"stages", stages.order},
                                   {"candidates", cands.size()},
                                   {"comment_threshold", stages.comment_threshold}};
            ctx.out << plan.dump(2) << '\n';
            return 0;
        }

        FunnelResult result = run_funnel(std::move(cands), stages, ctx.templates);
        for (const auto& w : result.warnings) spdlog::warn("{}", w);
        const nlohmann::json report = to_json(result);
        if (out_dir_) {
            write_candidates(*out_dir_ / "survivors.jsonl", result.survivors);
            write_candidates(*out_dir_ / "rejected.jsonl", result.rejected);
            write_candidates(*out_dir_ / "needs_review.jsonl", result.needs_review);
            write_json(*out_dir_ / "report.json", report);
        }
        ctx.out << report.dump(2) << '\n';
        return 0;
    }

private:
    std::optional<fs::path> candidates_;
    std::vector<std::string> stages_;
    std::optional<std::uint64_t> threshold_;
    std::optional<std::string> classifier_;
    std::optional<std::string> verifier_;
    std::optional<fs::path> votes_;
    std::optional<fs::path> out_dir_;
};

}  // namespace

std::unique_ptr<Command> make_filter_command() { return std::make_unique<FilterCommand>(); }

}  // namespace metakg::cli
