#include <algorithm>
#include <ostream>

#include <spdlog/spdlog.h>

#include "common.hpp"
#include "metakg/corpus.hpp"
#include "metakg/error.hpp"
#include "metakg/extract.hpp"
#include "metakg/graph_io.hpp"

namespace metakg::cli {
namespace {

namespace fs = std::filesystem;

std::vector<ExtractedPair> read_pairs(const fs::path& path) {
    std::vector<ExtractedPair> pairs;
    for (const auto& j : read_jsonl(path)) {
        ExtractedPair p;
        p.doc_id = j.value("doc_id", std::string{});
        p.source = j.at("source").get<std::string>();
        p.target = j.at("target").get<std::string>();
        p.extractor = j.value("extractor", std::string("file"));
        if (p.doc_id.empty()) throw InputError(path.string() + ": pair without doc_id");
        pairs.push_back(std::move(p));
    }
    return pairs;
}

class BuildCommand final : public Command {
public:
    CLI::App* attach(CLI::App& root) override {
        auto* sub = root.add_subcommand("build-kg", "Extract concept pairs from a corpus and build the graph file");
        sub->add_option("-m,--manifest", manifest_, "Dataset manifest (JSON)");
        sub->add_option("--pairs", pairs_, "Pre-extracted pairs as JSON Lines {doc_id, source, target}");
        sub->add_option("-o,--out", out_, "Graph file to write");
        sub->add_option("--report", report_, "Build report path (default <out>.report.json)");
        sub->add_option("--extractor", extractor_, "Backend name or mock:<fixture.json>");
        sub->add_option("--translator", translator_, "Backend for datasets flagged translate");
        sub->add_option("--batch", batch_, "Documents per extractor call")->check(CLI::PositiveNumber);
        sub->add_flag("--cooccur,!--no-cooccur", cooccur_, "Link concepts from the same document");
        sub->add_flag("--similar,!--no-similar", similar_, "Add embedding-similarity edges");
        sub->add_option("--similarity-threshold", threshold_, "Cosine threshold for similar edges");
        return sub;
    }

    int execute(Context& ctx) override {
        const Config& cfg = ctx.config;
        if (manifest_ && pairs_) throw InputError("--manifest and --pairs are mutually exclusive");
        const fs::path out = pick_path(out_, cfg.paths.graph, "output graph path (--out or paths.graph)");
        const fs::path report_path = report_ ? *report_ : fs::path(out.string() + ".report.json");

        BuildOptions options;
        options.cooccur = cooccur_.value_or(cfg.kg.cooccur);
        options.similar = similar_.value_or(cfg.kg.similar);
        options.similarity_threshold = threshold_.value_or(cfg.kg.similarity_threshold);
        std::unique_ptr<EmbeddingClient> embedder;
        if (options.similar) {
            if (!cfg.kg.embedding) throw InputError("similar edges need kg.embedding in the config");
            embedder = std::make_unique<HttpEmbeddingClient>(*cfg.kg.embedding);
            options.embedder = embedder.get();
        }

        nlohmann::json report = nlohmann::json::object();
        std::vector<ExtractedPair> pairs;
        std::vector<std::string> stages;

        if (pairs_) {
            require_file(*pairs_, "pairs file");
            pairs = read_pairs(*pairs_);
            stages = {"read_pairs", "build", "write"};
            report["input"] = {{"pairs_file", pairs_->string()}, {"pairs", pairs.size()}};
            if (ctx.dry_run) return plan(ctx, stages, report, options, out);
        } else {
            const fs::path manifest_path = pick_path(manifest_, cfg.paths.manifest, "manifest (--manifest or paths.manifest)");
            require_file(manifest_path, "manifest");
            const auto manifest = DatasetManifest::from_file(manifest_path);
            CorpusLoad corpus = load_corpus(manifest);
            for (const auto& s : corpus.skipped) {
                spdlog::warn("skipped {} line {}: {}", s.dataset, s.line, s.reason);
            }
            if (corpus.docs.empty()) throw InputError("corpus is empty: no documents to extract from");
            const bool needs_translation = std::any_of(manifest.datasets.begin(), manifest.datasets.end(),
                                                       [](const DatasetSpec& d) { return d.translate; });

            nlohmann::json skipped = nlohmann::json::array();
            for (const auto& s : corpus.skipped) {
                skipped.push_back({{"dataset", s.dataset}, {"line", s.line}, {"reason", s.reason}});
            }
            report["corpus"] = {{"docs", corpus.docs.size()},
                                {"per_dataset", corpus.per_dataset},
                                {"skipped_lines", std::move(skipped)}};

            stages = {"load_corpus"};
            if (needs_translation) stages.push_back("translate");
            stages.insert(stages.end(), {"extract", "build", "write"});

            auto extractor_backend = make_backend(
                pick_name(extractor_, cfg.kg.extractor, "extractor backend (--extractor or kg.extractor)"), cfg);
            ResolvedBackend translator;
            if (needs_translation) {
                translator = make_backend(
                    pick_name(translator_, cfg.kg.translator, "translator backend (--translator or kg.translator)"),
                    cfg);
            }
            if (ctx.dry_run) return plan(ctx, stages, report, options, out);

            ExtractOptions ex;
            ex.batch = batch_.value_or(cfg.kg.batch);
            ex.max_parallel = extractor_backend.max_parallel;
            ex.retry = cfg.retry;
            LlmExtractor extractor(*extractor_backend.backend, ctx.templates);
            ExtractionResult extraction =
                extract_corpus(std::move(corpus.docs), translator.backend.get(), extractor, ctx.templates, ex);

            nlohmann::json failures = nlohmann::json::array();
            for (const auto& f : extraction.failures) failures.push_back({{"doc_id", f.doc_id}, {"reason", f.reason}});
            for (const auto& f : extraction.skipped) failures.push_back({{"doc_id", f.doc_id}, {"reason", f.reason}});
            report["extraction"] = {{"extractor", extractor.id()},
                                    {"docs_loaded", extraction.counts.docs_loaded},
                                    {"docs_ok", extraction.counts.docs_ok},
                                    {"docs_failed", extraction.counts.docs_failed},
                                    {"docs_skipped", extraction.counts.docs_skipped},
                                    {"pairs", extraction.pairs.size()},
                                    {"rejected_pairs", extraction.rejections.size()},
                                    {"failures", std::move(failures)}};
            if (extraction.counts.docs_ok == 0) {
                throw BackendError("extraction failed for every document", false);
            }
            pairs = std::move(extraction.pairs);
        }

        if (pairs.empty()) throw InputError("no concept pairs to build a graph from");
        IngestResult ingest = ingest_to_graph(pairs, options);
        for (const auto& r : ingest.rejections) spdlog::warn("rejected pair: {}", r.reason);
        save_graph(out, ingest.graph);
        report["build"] = to_json(ingest.report);
        report["graph"] = out.string();
        write_json(report_path, report);
        spdlog::info("wrote {} ({} nodes, {} edges)", out.string(), ingest.report.nodes, ingest.report.edges);
        ctx.out << report.dump(2) << '\n';
        return 0;
    }

private:
    static int plan(Context& ctx, const std::vector<std::string>& stages, nlohmann::json inputs,
                    const BuildOptions& options, const fs::path& out) {
        nlohmann::json plan = {{"command", "build-kg"},
                               {"dry_run", true},
                               {"stages", stages},
                               {"inputs", std::move(inputs)},
                               {"options",
                                {{"cooccur", options.cooccur},
                                 {"similar", options.similar},
                                 {"similarity_threshold", options.similarity_threshold}}},
                               {"out", out.string()}};
        ctx.out << plan.dump(2) << '\n';
        return 0;
    }

    std::optional<fs::path> manifest_;
    std::optional<fs::path> pairs_;
    std::optional<fs::path> out_;
    std::optional<fs::path> report_;
    std::optional<std::string> extractor_;
    std::optional<std::string> translator_;
    std::optional<std::size_t> batch_;
    std::optional<bool> cooccur_;
    std::optional<bool> similar_;
    std::optional<double> threshold_;
};

}  // namespace

std::unique_ptr<Command> make_build_command() { return std::make_unique<BuildCommand>(); }

}  // namespace metakg::cli
