#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "metakg/backend.hpp"
#include "metakg/corpus.hpp"
#include "metakg/graph.hpp"
#include "metakg/templates.hpp"

namespace metakg {

struct RawPair {
    std::string source;
    std::string target;
    std::optional<double> confidence;
};

/// Outcome for one document of an extractor batch.
struct DocExtraction {
    bool ok = true;
    std::vector<RawPair> pairs;
    std::string error;
};

/// Turns documents into (source, target) pairs. One `extract` call per
/// batch; returns one entry per input document, same order. Transport
/// failures throw BackendError.
class ExtractorClient {
public:
    virtual ~ExtractorClient() = default;
    virtual std::vector<DocExtraction> extract(std::span<const CorpusDoc> batch) = 0;
    [[nodiscard]] virtual std::string id() const = 0;
};

/// Parses a reply of the form [{"source": ..., "target": ...}, ...],
/// tolerating surrounding prose or code fences around the array.
std::optional<std::vector<RawPair>> parse_pair_list(std::string_view reply);

/// Extractor backed by a chat model and the "extract" template.
class LlmExtractor final : public ExtractorClient {
public:
    LlmExtractor(ModelBackend& backend, TemplateSet templates, double temperature = 0.0)
        : backend_(backend), templates_(std::move(templates)), temperature_(temperature) {}

    std::vector<DocExtraction> extract(std::span<const CorpusDoc> batch) override;
    [[nodiscard]] std::string id() const override { return backend_.id(); }

private:
    ModelBackend& backend_;
    TemplateSet templates_;
    double temperature_;
};

struct ExtractedPair {
    std::string doc_id;
    std::string source;
    std::string target;
    std::string extractor;
    std::optional<double> confidence;
};

struct PairRejection {
    std::string doc_id;
    std::string source;
    std::string target;
    std::string reason;
};

struct DocFailure {
    std::string doc_id;
    std::string reason;
};

struct ExtractOptions {
    std::size_t batch = 8;
    std::size_t max_parallel = 1;
    RetryPolicy retry;
};

struct ExtractionCounts {
    std::size_t docs_loaded = 0;
    std::size_t docs_ok = 0;
    std::size_t docs_failed = 0;
    std::size_t docs_skipped = 0;
};

struct ExtractionResult {
    std::vector<ExtractedPair> pairs;  ///< input doc order, then response index
    std::vector<PairRejection> rejections;
    std::vector<DocFailure> failures;
    std::vector<DocFailure> skipped;
    ExtractionCounts counts;
};

/// Validates and attributes extractor output. Batches whose transport keeps
/// failing after retries mark all their docs failed.
ExtractionResult extract_pairs(std::span<const CorpusDoc> docs, ExtractorClient& extractor,
                               const ExtractOptions& options);

/// Translates docs flagged Lang::other through `translator` using the
/// "translate" template. Docs whose translation fails are returned in
/// `skipped` instead of `docs`.
struct TranslationResult {
    std::vector<CorpusDoc> docs;
    std::vector<DocFailure> skipped;
};
TranslationResult translate_docs(std::vector<CorpusDoc> docs, ModelBackend& translator, const TemplateSet& templates,
                                 const ExtractOptions& options);

/// Translation (when `translator` is set and a doc needs it) followed by
/// extraction. Counts cover the whole input:
/// docs_loaded = docs_ok + docs_failed + docs_skipped.
ExtractionResult extract_corpus(std::vector<CorpusDoc> docs, ModelBackend* translator, ExtractorClient& extractor,
                                const TemplateSet& templates, const ExtractOptions& options);

struct BuildReport {
    std::size_t nodes = 0;
    std::size_t edges = 0;
    std::map<std::string, std::size_t> edges_by_kind;
    std::vector<std::pair<std::string, std::size_t>> top_degree;  ///< (label, degree), degree desc
    std::size_t rejected_pairs = 0;
    std::string digest;
};

nlohmann::json to_json(const BuildReport& report);

struct IngestResult {
    MetaphorGraph graph;
    BuildReport report;
    std::vector<BuildRejection> rejections;
};

IngestResult ingest_to_graph(std::span<const ExtractedPair> pairs, const BuildOptions& options,
                             std::size_t top_k = 10);

}  // namespace metakg
