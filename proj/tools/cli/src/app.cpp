#include "metakg/cli/app.hpp"

#include <algorithm>
#include <ostream>

#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "common.hpp"
#include "metakg/error.hpp"

namespace metakg::cli {
namespace {

/// Routes the default spdlog logger to `err` for the duration of a run.
class LogScope {
public:
    LogScope(std::ostream& err, spdlog::level::level_enum level) : previous_(spdlog::default_logger()) {
        auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err, true);
        auto logger = std::make_shared<spdlog::logger>("metakg", sink);
        logger->set_pattern("[%l] %v");
        logger->set_level(level);
        spdlog::set_default_logger(logger);
    }
    ~LogScope() { spdlog::set_default_logger(previous_); }
    LogScope(const LogScope&) = delete;
    LogScope& operator=(const LogScope&) = delete;

private:
    std::shared_ptr<spdlog::logger> previous_;
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Metaphor knowledge-graph retrieval, inference and evaluation tool", "metakg"};
    app.require_subcommand(1);
    app.set_help_flag("--help", "Print this help message and exit");
    app.set_version_flag("--version", "metakg 0.1.0");

    std::optional<std::filesystem::path> config_path;
    std::optional<std::filesystem::path> templates_dir;
    std::optional<std::size_t> max_parallel;
    std::string log_level = "info";
    bool dry_run = false;
    app.add_option("-c,--config", config_path, "JSON config file");
    app.add_option("--templates", templates_dir, "Directory of <stage>.txt prompt overrides");
    app.add_option("-j,--max-parallel", max_parallel, "Cap on concurrent backend calls")
        ->check(CLI::PositiveNumber);
    app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));
    app.add_flag("--dry-run", dry_run, "Validate inputs and print the planned stages without backend calls");
    app.fallthrough();

    std::vector<std::unique_ptr<Command>> commands;
    commands.push_back(make_build_command());
    commands.push_back(make_query_command());
    commands.push_back(make_boost_command());
    commands.push_back(make_eval_command());
    commands.push_back(make_filter_command());
    commands.push_back(make_sweep_command());
    std::vector<CLI::App*> subs;
    for (auto& c : commands) subs.push_back(c->attach(app));

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInput;
    }

    LogScope logs(err, spdlog::level::from_str(log_level));
    try {
        Context ctx{config_path ? Config::from_file(*config_path) : Config{}, TemplateSet::defaults(), dry_run, out,
                    err};
        if (max_parallel) ctx.config.max_parallel = *max_parallel;
        if (templates_dir) ctx.config.paths.templates = *templates_dir;
        ctx.config.validate();
        if (!ctx.config.paths.templates.empty()) ctx.templates = TemplateSet::load(ctx.config.paths.templates);

        for (std::size_t i = 0; i < subs.size(); ++i) {
            if (subs[i]->parsed()) return commands[i]->execute(ctx);
        }
        return kExitInput;
    } catch (const InputError& e) {
        spdlog::error("{}", e.what());
        return kExitInput;
    } catch (const BackendError& e) {
        spdlog::error("backend: {}", e.what());
        return kExitBackend;
    } catch (const InvariantError& e) {
        spdlog::error("invariant violated: {}", e.what());
        return kExitInvariant;
    } catch (const nlohmann::json::exception& e) {
        spdlog::error("malformed JSON input: {}", e.what());
        return kExitInput;
    } catch (const std::filesystem::filesystem_error& e) {
        spdlog::error("{}", e.what());
        return kExitInput;
    } catch (const std::exception& e) {
        spdlog::error("internal error: {}", e.what());
        return kExitInvariant;
    }
}

}  // namespace metakg::cli
