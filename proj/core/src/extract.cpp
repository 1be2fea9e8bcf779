#include "metakg/extract.hpp"

#include <algorithm>
#include <thread>

#include <spdlog/spdlog.h>

#include "metakg/error.hpp"
#include "metakg/normalize.hpp"
#include "metakg/parallel.hpp"

namespace metakg {
namespace {

std::optional<nlohmann::json> parse_json_array(std::string_view reply) {
    auto try_parse = [](std::string_view s) -> std::optional<nlohmann::json> {
        auto j = nlohmann::json::parse(s, nullptr, false);
        if (j.is_discarded() || !j.is_array()) return std::nullopt;
        return j;
    };
    if (auto j = try_parse(reply)) return j;
    auto open = reply.find('[');
    auto close = reply.rfind(']');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open) return std::nullopt;
    return try_parse(reply.substr(open, close - open + 1));
}

}  // namespace

std::optional<std::vector<RawPair>> parse_pair_list(std::string_view reply) {
    auto arr = parse_json_array(reply);
    if (!arr) return std::nullopt;
    std::vector<RawPair> pairs;
    for (const auto& item : *arr) {
        RawPair p;
        if (item.is_object() && item.contains("source") && item.contains("target") && item["source"].is_string() &&
            item["target"].is_string()) {
            p.source = item["source"].get<std::string>();
            p.target = item["target"].get<std::string>();
            if (auto c = item.find("confidence"); c != item.end() && c->is_number()) {
                double v = c->get<double>();
                if (v >= 0.0 && v <= 1.0) p.confidence = v;
            }
        } else if (item.is_array() && item.size() == 2 && item[0].is_string() && item[1].is_string()) {
            p.source = item[0].get<std::string>();
            p.target = item[1].get<std::string>();
        } else {
            return std::nullopt;
        }
        pairs.push_back(std::move(p));
    }
    return pairs;
}

std::vector<DocExtraction> LlmExtractor::extract(std::span<const CorpusDoc> batch) {
    std::vector<DocExtraction> out;
    out.reserve(batch.size());
    for (const auto& doc : batch) {
        ChatRequest req;
        req.user = render_template(templates_.get("extract"), {{"text", doc.text}});
        req.temperature = temperature_;
        ChatReply reply = backend_.complete(req);
        DocExtraction ex;
        if (auto pairs = parse_pair_list(reply.text)) {
            ex.pairs = std::move(*pairs);
        } else {
            ex.ok = false;
            ex.error = "unparseable extractor reply: " + reply.text.substr(0, 200);
        }
        out.push_back(std::move(ex));
    }
    return out;
}

ExtractionResult extract_pairs(std::span<const CorpusDoc> docs, ExtractorClient& extractor,
                               const ExtractOptions& options) {
    if (options.batch < 1) throw InputError("extraction batch size must be >= 1");
    const std::size_t batches = (docs.size() + options.batch - 1) / options.batch;

    struct BatchOutcome {
        std::vector<DocExtraction> docs;
        std::string transport_error;
    };
    auto outcomes = parallel_map(batches, options.max_parallel, [&](std::size_t b) {
        auto slice = docs.subspan(b * options.batch, std::min(options.batch, docs.size() - b * options.batch));
        BatchOutcome outcome;
        auto delay = options.retry.base_delay;
        const int attempts = std::max(options.retry.max_attempts, 1);
        for (int attempt = 1;; ++attempt) {
            try {
                outcome.docs = extractor.extract(slice);
                if (outcome.docs.size() != slice.size()) {
                    throw InvariantError("extractor returned " + std::to_string(outcome.docs.size()) +
                                         " results for " + std::to_string(slice.size()) + " docs");
                }
                return outcome;
            } catch (const BackendError& e) {
                if (!e.transient() || attempt >= attempts) {
                    outcome.docs.clear();
                    outcome.transport_error = e.what();
                    return outcome;
                }
                spdlog::warn("extraction batch {} attempt {} failed: {}", b, attempt, e.what());
                if (delay.count() > 0) std::this_thread::sleep_for(delay);
                delay *= 2;
            }
        }
    });

    ExtractionResult result;
    result.counts.docs_loaded = docs.size();
    const std::string extractor_id = extractor.id();
    for (std::size_t b = 0; b < batches; ++b) {
        const auto& outcome = outcomes[b];
        const std::size_t first = b * options.batch;
        const std::size_t n = std::min(options.batch, docs.size() - first);
        for (std::size_t k = 0; k < n; ++k) {
            const CorpusDoc& doc = docs[first + k];
            if (!outcome.transport_error.empty()) {
                result.failures.push_back({doc.doc_id, "transport: " + outcome.transport_error});
                continue;
            }
            const DocExtraction& ex = outcome.docs[k];
            if (!ex.ok) {
                result.failures.push_back({doc.doc_id, ex.error});
                continue;
            }
            ++result.counts.docs_ok;
            for (const RawPair& p : ex.pairs) {
                std::string s = normalize_label(p.source);
                std::string t = normalize_label(p.target);
                if (s.empty() || t.empty()) {
                    result.rejections.push_back({doc.doc_id, p.source, p.target, "empty after normalization"});
                } else if (s == t) {
                    result.rejections.push_back({doc.doc_id, p.source, p.target, "source equals target"});
                } else {
                    result.pairs.push_back({doc.doc_id, p.source, p.target, extractor_id, p.confidence});
                }
            }
        }
    }
    result.counts.docs_failed = result.failures.size();
    return result;
}

TranslationResult translate_docs(std::vector<CorpusDoc> docs, ModelBackend& translator, const TemplateSet& templates,
                                 const ExtractOptions& options) {
    struct Outcome {
        std::optional<std::string> text;
        std::string error;
    };
    auto outcomes = parallel_map(docs.size(), options.max_parallel, [&](std::size_t i) {
        Outcome o;
        if (docs[i].lang == Lang::en) return o;
        ChatRequest req;
        req.user = render_template(templates.get("translate"), {{"text", docs[i].text}});
        req.temperature = 0.0;
        try {
            auto reply = split_thinking(complete_with_retry(translator, req, options.retry));
            if (reply.text.find_first_not_of(" \t\r\n") == std::string::npos) o.error = "empty translation";
            else o.text = std::move(reply.text);
        } catch (const BackendError& e) {
            o.error = e.what();
        }
        return o;
    });

    TranslationResult result;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        CorpusDoc& doc = docs[i];
        if (doc.lang == Lang::en) {
            result.docs.push_back(std::move(doc));
        } else if (outcomes[i].text) {
            doc.text = std::move(*outcomes[i].text);
            doc.lang = Lang::en;
            result.docs.push_back(std::move(doc));
        } else {
            result.skipped.push_back({doc.doc_id, "translation failed: " + outcomes[i].error});
        }
    }
    return result;
}

ExtractionResult extract_corpus(std::vector<CorpusDoc> docs, ModelBackend* translator, ExtractorClient& extractor,
                                const TemplateSet& templates, const ExtractOptions& options) {
    const std::size_t loaded = docs.size();
    std::vector<DocFailure> skipped;
    const bool needs_translation =
        std::any_of(docs.begin(), docs.end(), [](const CorpusDoc& d) { return d.lang != Lang::en; });
    if (needs_translation) {
        if (translator == nullptr) throw InputError("corpus has docs marked for translation but no translator");
        auto translated = translate_docs(std::move(docs), *translator, templates, options);
        docs = std::move(translated.docs);
        skipped = std::move(translated.skipped);
    }
    ExtractionResult result = extract_pairs(docs, extractor, options);
    result.skipped = std::move(skipped);
    result.counts.docs_loaded = loaded;
    result.counts.docs_skipped = result.skipped.size();
    if (result.counts.docs_ok + result.counts.docs_failed + result.counts.docs_skipped != loaded) {
        throw InvariantError("extraction lost documents");
    }
    return result;
}

nlohmann::json to_json(const BuildReport& report) {
    nlohmann::json top = nlohmann::json::array();
    for (const auto& [label, degree] : report.top_degree) top.push_back({{"label", label}, {"degree", degree}});
    return {{"nodes", report.nodes},
            {"edges", report.edges},
            {"edges_by_kind", report.edges_by_kind},
            {"top_degree", std::move(top)},
            {"rejected_pairs", report.rejected_pairs},
            {"digest", report.digest}};
}

IngestResult ingest_to_graph(std::span<const ExtractedPair> pairs, const BuildOptions& options, std::size_t top_k) {
    std::vector<ConceptPair> concept_pairs;
    concept_pairs.reserve(pairs.size());
    for (const auto& p : pairs) concept_pairs.push_back({p.source, p.target, p.doc_id});

    BuildResult built = build_graph(concept_pairs, options);
    IngestResult out{std::move(built.graph), {}, std::move(built.rejections)};
    const MetaphorGraph& g = out.graph;

    BuildReport& r = out.report;
    r.nodes = g.node_count();
    r.edges = g.edge_count();
    for (EdgeKind k : {EdgeKind::mapping, EdgeKind::cooccur, EdgeKind::similar}) {
        r.edges_by_kind[std::string(edge_kind_name(k))] = 0;
    }
    for (const auto& e : g.edges()) ++r.edges_by_kind[std::string(edge_kind_name(e.kind))];
    std::vector<std::pair<std::string, std::size_t>> degrees;
    degrees.reserve(g.node_count());
    for (const auto& n : g.nodes()) degrees.emplace_back(n.label, g.neighbors(n.id).size());
    std::sort(degrees.begin(), degrees.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    if (degrees.size() > top_k) degrees.resize(top_k);
    r.top_degree = std::move(degrees);
    r.rejected_pairs = out.rejections.size();
    r.digest = g.meta().digest;
    return out;
}

}  // namespace metakg
