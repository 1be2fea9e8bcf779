#include "metakg/eval.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>

#include "metakg/error.hpp"

namespace metakg {

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

RecordFieldMap RecordFieldMap::from_json(const nlohmann::json& j) {
    RecordFieldMap m;
    m.item_id = j.value("item_id", m.item_id);
    m.title = j.value("title", m.title);
    m.metaphor_type = j.value("metaphor_type", m.metaphor_type);
    m.golden = j.value("golden_interpretation", m.golden);
    m.duration = j.value("duration_s", m.duration);
    m.frames = j.value("frames", m.frames);
    return m;
}

std::vector<BenchmarkRecord> load_records(const std::filesystem::path& path, const RecordFieldMap& fields) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open records file " + path.string());
    std::vector<BenchmarkRecord> records;
    std::set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = path.string() + " line " + std::to_string(line_no);
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) throw InputError(where + ": not a JSON object");
        BenchmarkRecord r;
        try {
            j.at(fields.item_id).get_to(r.item_id);
            r.title = j.value(fields.title, std::string{});
            auto type = parse_metaphor_type(j.at(fields.metaphor_type).get<std::string>());
            if (!type) throw InputError(where + ": unknown metaphor type " + j.at(fields.metaphor_type).dump());
            r.metaphor_type = *type;
            j.at(fields.golden).get_to(r.golden_interpretation);
            r.duration_s = j.value(fields.duration, 0.0);
            if (auto f = j.find(fields.frames); f != j.end()) {
                for (const auto& p : *f) {
                    std::filesystem::path fp = p.get<std::string>();
                    if (fp.is_relative()) fp = path.parent_path() / fp;
                    r.frame_paths.push_back(std::move(fp));
                }
            }
        } catch (const nlohmann::json::exception& e) {
            throw InputError(where + ": " + e.what());
        }
        if (r.golden_interpretation.empty()) throw InputError(where + ": empty golden interpretation");
        if (!seen.insert(r.item_id).second) throw InputError(where + ": duplicate item_id " + r.item_id);
        records.push_back(std::move(r));
    }
    return records;
}

// ---------------------------------------------------------------------------
// Verdicts
// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const JudgeVerdict& v) {
    j = {{"item_id", v.item_id},
         {"raw_score", v.raw_score},
         {"scaled", v.scaled},
         {"rationale", v.rationale},
         {"judge_backend", v.judge_backend}};
}

void from_json(const nlohmann::json& j, JudgeVerdict& v) {
    j.at("item_id").get_to(v.item_id);
    j.at("raw_score").get_to(v.raw_score);
    v.rationale = j.value("rationale", std::string{});
    v.judge_backend = j.value("judge_backend", std::string{});
    if (v.raw_score < 0 || v.raw_score > 10) {
        throw InputError("verdict for " + v.item_id + " has raw_score outside 0..10");
    }
    v.scaled = 10 * v.raw_score;
    if (j.contains("scaled") && j.at("scaled").get<int>() != v.scaled) {
        throw InputError("verdict for " + v.item_id + " has scaled != 10 * raw_score");
    }
}

void to_json(nlohmann::json& j, const JudgeFailure& f) {
    j = {{"item_id", f.item_id}, {"status", "failed"}, {"reason", f.reason}};
    if (!f.raw_reply.empty()) j["raw_reply"] = f.raw_reply;
}

namespace {

bool ieq_prefix(std::string_view text, std::size_t pos, std::string_view word) {
    if (pos + word.size() > text.size()) return false;
    for (std::size_t i = 0; i < word.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(text[pos + i])) != word[i]) return false;
    }
    return true;
}

// Integer starting at `pos` (optional '-'), rejecting decimals like "7.5".
std::optional<std::pair<int, std::size_t>> integer_at(std::string_view text, std::size_t pos) {
    std::size_t p = pos;
    bool neg = false;
    if (p < text.size() && text[p] == '-') {
        neg = true;
        ++p;
    }
    std::size_t start = p;
    long long value = 0;
    while (p < text.size() && std::isdigit(static_cast<unsigned char>(text[p]))) {
        value = std::min<long long>(value * 10 + (text[p] - '0'), 1'000'000);
        ++p;
    }
    if (p == start) return std::nullopt;
    if (p + 1 < text.size() && text[p] == '.' && std::isdigit(static_cast<unsigned char>(text[p + 1]))) {
        return std::nullopt;
    }
    return std::pair{static_cast<int>(neg ? -value : value), p};
}

}  // namespace

std::optional<int> parse_judge_score(std::string_view reply) {
    std::optional<int> labelled;
    for (std::size_t pos = 0; pos < reply.size(); ++pos) {
        if (!ieq_prefix(reply, pos, "score")) continue;
        std::size_t p = pos + 5;
        while (p < reply.size() && (reply[p] == ' ' || reply[p] == '\t' || reply[p] == ':' || reply[p] == '=' ||
                                    reply[p] == '*')) {
            ++p;
        }
        if (auto v = integer_at(reply, p)) labelled = v->first;
    }
    if (labelled) return labelled;

    // Otherwise accept the reply only if it holds exactly one integer token.
    std::optional<int> only;
    std::size_t count = 0;
    for (std::size_t pos = 0; pos < reply.size();) {
        const bool starts_number = std::isdigit(static_cast<unsigned char>(reply[pos])) ||
                                   (reply[pos] == '-' && pos + 1 < reply.size() &&
                                    std::isdigit(static_cast<unsigned char>(reply[pos + 1])));
        const bool boundary = pos == 0 || !std::isalnum(static_cast<unsigned char>(reply[pos - 1]));
        if (starts_number && boundary) {
            std::size_t end = pos + 1;
            while (end < reply.size() && (std::isdigit(static_cast<unsigned char>(reply[end])) || reply[end] == '.')) {
                ++end;
            }
            ++count;
            auto v = integer_at(reply, pos);
            if (!v) return std::nullopt;  // a decimal
            only = v->first;
            pos = end;
        } else {
            ++pos;
        }
    }
    return count == 1 ? only : std::nullopt;
}

std::optional<JudgeVerdict> make_verdict(std::string item_id, int raw, std::string rationale, std::string backend) {
    if (raw < 0 || raw > 10) return std::nullopt;
    return JudgeVerdict{std::move(item_id), raw, 10 * raw, std::move(rationale), std::move(backend)};
}

JudgeOutcome judge(const BenchmarkRecord& record, std::string_view candidate, ModelBackend& backend,
                   const TemplateSet& templates, const JudgeConfig& cfg) {
    if (candidate.find_first_not_of(" \t\r\n") == std::string_view::npos) {
        return JudgeFailure{record.item_id, "empty candidate interpretation", {}};
    }
    ChatRequest req;
    req.user = render_template(templates.get("judge"), {{"title", record.title},
                                                        {"golden", record.golden_interpretation},
                                                        {"candidate", std::string(candidate)}});
    req.temperature = cfg.temperature;

    std::string last_reply;
    for (int attempt = 0; attempt < 2; ++attempt) {
        if (attempt == 1) {
            req.user += "\n\nYour previous reply did not contain a valid score. Reply with the final score only, "
                        "as a single integer from 0 to 10.";
        }
        ChatReply reply;
        try {
            reply = split_thinking(complete_with_retry(backend, req, cfg.retry));
        } catch (const BackendError& e) {
            return JudgeFailure{record.item_id, std::string("judge backend: ") + e.what(), last_reply};
        }
        last_reply = reply.text;
        if (auto raw = parse_judge_score(reply.text)) {
            if (auto v = make_verdict(record.item_id, *raw, reply.text, backend.id())) return *v;
        }
    }
    return JudgeFailure{record.item_id, "no integer score in 0..10 after repair", last_reply};
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

ScoreReport aggregate(std::span<const JudgeVerdict> verdicts, std::span<const BenchmarkRecord> records) {
    std::unordered_map<std::string, MetaphorType> type_of;
    for (const auto& r : records) type_of.emplace(r.item_id, r.metaphor_type);

    std::map<MetaphorType, std::pair<std::size_t, long long>> sums;
    std::set<std::string> seen;
    long long total_sum = 0;
    for (const auto& v : verdicts) {
        auto it = type_of.find(v.item_id);
        if (it == type_of.end()) throw InputError("verdict for unknown item " + v.item_id);
        if (!seen.insert(v.item_id).second) throw InputError("duplicate verdict for item " + v.item_id);
        if (v.scaled != 10 * v.raw_score || v.raw_score < 0 || v.raw_score > 10) {
            throw InvariantError("verdict for " + v.item_id + " violates scaled = 10 * raw, raw in 0..10");
        }
        auto& [n, sum] = sums[it->second];
        ++n;
        sum += v.scaled;
        total_sum += v.scaled;
    }

    ScoreReport report;
    report.total = verdicts.size();
    double macro_sum = 0.0;
    for (const auto& [type, ns] : sums) {
        TypeScore ts{ns.first, static_cast<double>(ns.second) / static_cast<double>(ns.first)};
        report.per_type.emplace(type, ts);
        macro_sum += ts.mean;
    }
    if (report.total > 0) {
        report.micro_mean = static_cast<double>(total_sum) / static_cast<double>(report.total);
        report.macro_mean = macro_sum / static_cast<double>(report.per_type.size());
    }
    return report;
}

nlohmann::json to_json(const ScoreReport& report) {
    nlohmann::json per_type = nlohmann::json::object();
    for (MetaphorType t : kAllMetaphorTypes) {
        auto it = report.per_type.find(t);
        if (it == report.per_type.end()) {
            per_type[std::string(metaphor_type_id(t))] = {{"n", 0}, {"mean", nullptr}};
        } else {
            per_type[std::string(metaphor_type_id(t))] = {{"n", it->second.n}, {"mean", it->second.mean}};
        }
    }
    return {{"label", report.label},     {"per_type", std::move(per_type)}, {"total", report.total},
            {"micro_mean", report.micro_mean}, {"macro_mean", report.macro_mean}, {"failed", report.failed},
            {"metadata", report.metadata}};
}

std::vector<std::string> balance_warnings(const std::map<MetaphorType, std::size_t>& counts) {
    std::vector<std::size_t> values;
    for (MetaphorType t : kAllMetaphorTypes) {
        auto it = counts.find(t);
        values.push_back(it == counts.end() ? 0 : it->second);
    }
    std::vector<std::size_t> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    const double median = (static_cast<double>(sorted[3]) + static_cast<double>(sorted[4])) / 2.0;
    std::vector<std::string> warnings;
    if (median <= 0) return warnings;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double c = static_cast<double>(values[i]);
        if (c > 2.0 * median || c < median / 2.0) {
            warnings.push_back(fmt::format("type balance: {} has {} samples (median {:.1f})",
                                           metaphor_type_name(kAllMetaphorTypes[i]), values[i], median));
        }
    }
    return warnings;
}

std::string render_score_table(std::span<const ScoreReport> reports, const ReportOptions& options) {
    std::vector<std::string> header = {"Method"};
    for (MetaphorType t : kAllMetaphorTypes) header.emplace_back(metaphor_type_short(t));
    header.emplace_back("Micro");
    header.emplace_back("Macro");

    std::vector<std::vector<std::string>> rows;
    for (const auto& r : reports) {
        std::vector<std::string> scores = {r.label.empty() ? std::string("(unnamed)") : r.label};
        std::vector<std::string> counts = {"  n"};
        for (MetaphorType t : kAllMetaphorTypes) {
            auto it = r.per_type.find(t);
            scores.push_back(it == r.per_type.end() ? "-" : fmt::format("{:.1f}", it->second.mean));
            counts.push_back(std::to_string(it == r.per_type.end() ? 0 : it->second.n));
        }
        scores.push_back(r.total ? fmt::format("{:.1f}", r.micro_mean) : "-");
        scores.push_back(r.total ? fmt::format("{:.1f}", r.macro_mean) : "-");
        counts.push_back(std::to_string(r.total));
        counts.push_back(std::to_string(r.per_type.size()) + " types");
        rows.push_back(std::move(scores));
        rows.push_back(std::move(counts));
    }

    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
        width[c] = header[c].size();
        for (const auto& row : rows) width[c] = std::max(width[c], row[c].size());
    }
    std::ostringstream out;
    auto emit = [&](const std::vector<std::string>& row) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c == 0) out << fmt::format("{:<{}}", row[c], width[c]);
            else out << "  " << fmt::format("{:>{}}", row[c], width[c]);
        }
        out << '\n';
    };
    std::size_t line_width = 0;
    for (std::size_t w : width) line_width += w + 2;
    const std::string rule(line_width - 2, '-');

    emit(header);
    out << rule << '\n';
    for (const auto& row : rows) emit(row);
    out << rule << '\n';

    out << "Micro: sample-weighted mean of scaled scores (0-100). "
           "Macro: unweighted mean of per-type means over types with samples.\n";
    for (const auto& r : reports) {
        if (r.failed > 0) out << fmt::format("{}: {} failed judgment(s) excluded from means\n", r.label, r.failed);
    }
    if (options.reference_average) {
        const double ref = *options.reference_average;
        for (const auto& r : reports) {
            if (r.total == 0) continue;
            out << fmt::format(
                "{}: reference average {:.1f} differs from macro {:.1f} by {:+.1f} and from micro {:.1f} by "
                "{:+.1f}; the reference's averaging method is not documented, so no match is claimed.\n",
                r.label, ref, r.macro_mean, ref - r.macro_mean, r.micro_mean, ref - r.micro_mean);
        }
    }
    for (const auto& note : options.extra_notes) out << note << '\n';
    return out.str();
}

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

double pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw InputError("pearson: length mismatch");
    if (xs.size() < 2) throw InputError("pearson: need at least 2 points");
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0 || syy == 0) throw InputError("pearson: undefined correlation (zero variance)");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::string_view deficiency_id(Deficiency d) noexcept {
    switch (d) {
        case Deficiency::wrong_recognition: return "wrong_recognition";
        case Deficiency::missing_mapping: return "missing_mapping";
        case Deficiency::superficial_mapping: return "superficial_mapping";
        case Deficiency::improper_mapping: return "improper_mapping";
    }
    return "unknown";
}

std::string_view deficiency_name(Deficiency d) noexcept {
    switch (d) {
        case Deficiency::wrong_recognition: return "Wrong Recognition";
        case Deficiency::missing_mapping: return "Missing Mapping";
        case Deficiency::superficial_mapping: return "Superficial Mapping";
        case Deficiency::improper_mapping: return "Improper Mapping";
    }
    return "Unknown";
}

std::optional<Deficiency> parse_deficiency(std::string_view text) {
    for (Deficiency d : {Deficiency::wrong_recognition, Deficiency::missing_mapping, Deficiency::superficial_mapping,
                         Deficiency::improper_mapping}) {
        if (text == deficiency_id(d) || text == deficiency_name(d)) return d;
    }
    return std::nullopt;
}

std::map<Deficiency, double> tally_deficiencies(std::span<const DeficiencyAnnotation> annotations) {
    std::map<Deficiency, double> out;
    if (annotations.empty()) return out;
    std::map<Deficiency, std::size_t> counts;
    for (const auto& a : annotations) ++counts[a.category];
    for (const auto& [d, c] : counts) {
        out[d] = static_cast<double>(c) / static_cast<double>(annotations.size());
    }
    return out;
}

std::string render_deficiency_table(const std::string& label, const std::map<Deficiency, double>& proportions) {
    const std::array<Deficiency, 4> order = {Deficiency::wrong_recognition, Deficiency::missing_mapping,
                                             Deficiency::superficial_mapping, Deficiency::improper_mapping};
    std::vector<std::string> header = {"Model"};
    std::vector<std::string> row = {label};
    for (Deficiency d : order) {
        header.emplace_back(deficiency_name(d));
        auto it = proportions.find(d);
        row.push_back(fmt::format("{:.1f}%", it == proportions.end() ? 0.0 : 100.0 * it->second));
    }
    std::ostringstream out;
    for (const auto* r : {&header, &row}) {
        for (std::size_t c = 0; c < r->size(); ++c) {
            const std::size_t w = std::max(header[c].size(), row[c].size());
            if (c == 0) out << fmt::format("{:<{}}", (*r)[c], w);
            else out << "  " << fmt::format("{:>{}}", (*r)[c], w);
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace metakg
