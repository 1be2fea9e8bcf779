#include "metakg/cli/config.hpp"

#include <fstream>
#include <initializer_list>
#include <set>

#include "metakg/error.hpp"
#include "metakg/mock_backend.hpp"

namespace metakg::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void check_keys(const json& j, std::string_view section, std::initializer_list<std::string_view> allowed) {
    if (!j.is_object()) throw InputError("config: '" + std::string(section) + "' must be an object");
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (auto a : allowed) known = known || a == key;
        if (!known) throw InputError("config: unknown key '" + key + "' in " + std::string(section));
    }
}

template <typename T>
void read(const json& j, const char* key, T& into) {
    if (auto it = j.find(key); it != j.end() && !it->is_null()) {
        try {
            it->get_to(into);
        } catch (const json::exception& e) {
            throw InputError(std::string("config: bad value for '") + key + "': " + e.what());
        }
    }
}

void read_path(const json& j, const char* key, fs::path& into, const fs::path& base) {
    std::string raw;
    read(j, key, raw);
    if (raw.empty()) return;
    fs::path p(raw);
    into = p.is_relative() && !base.empty() ? base / p : p;
}

QueryMode mode_or_throw(const std::string& text) {
    auto mode = parse_query_mode(text);
    if (!mode) throw InputError("config: unknown query mode '" + text + "' (expected ranked or random)");
    return *mode;
}

void check_temperature(double t, std::string_view where) {
    if (!(t >= 0.0 && t <= 2.0)) throw InputError("config: " + std::string(where) + " must be within [0, 2]");
}

}  // namespace

Config Config::from_json(const json& j, const fs::path& base_dir) {
    check_keys(j, "config", {"backends", "kg", "boost", "judge", "filter", "paths", "sweep", "retry", "max_parallel"});
    Config c;

    if (auto it = j.find("backends"); it != j.end()) {
        if (!it->is_object()) throw InputError("config: 'backends' must be an object");
        for (const auto& [name, b] : it->items()) {
            check_keys(b, "backends." + name,
                       {"provider", "endpoint", "model", "api_key_env", "max_parallel", "timeout_s", "max_tokens",
                        "fixture"});
            BackendSpec spec;
            spec.name = name;
            read(b, "provider", spec.provider);
            read(b, "endpoint", spec.endpoint);
            read(b, "model", spec.model);
            read(b, "api_key_env", spec.api_key_env);
            read(b, "max_parallel", spec.max_parallel);
            read(b, "timeout_s", spec.timeout_s);
            read(b, "max_tokens", spec.max_tokens);
            read_path(b, "fixture", spec.fixture, base_dir);
            c.backends.emplace(name, std::move(spec));
        }
    }

    if (auto it = j.find("kg"); it != j.end()) {
        const json& k = *it;
        check_keys(k, "kg",
                   {"h", "z", "mode", "seed", "token_fallback", "cooccur", "similar", "similarity_threshold",
                    "embedding", "extractor", "translator", "batch"});
        read(k, "h", c.kg.h);
        read(k, "z", c.kg.z);
        std::string mode;
        read(k, "mode", mode);
        if (!mode.empty()) c.kg.mode = mode_or_throw(mode);
        read(k, "seed", c.kg.seed);
        read(k, "token_fallback", c.kg.token_fallback);
        read(k, "cooccur", c.kg.cooccur);
        read(k, "similar", c.kg.similar);
        read(k, "similarity_threshold", c.kg.similarity_threshold);
        read(k, "extractor", c.kg.extractor);
        read(k, "translator", c.kg.translator);
        read(k, "batch", c.kg.batch);
        if (auto e = k.find("embedding"); e != k.end() && !e->is_null()) {
            check_keys(*e, "kg.embedding", {"endpoint", "model", "api_key_env", "timeout_s", "batch"});
            HttpEmbeddingConfig emb;
            read(*e, "endpoint", emb.endpoint);
            read(*e, "model", emb.model);
            read(*e, "api_key_env", emb.api_key_env);
            int timeout = static_cast<int>(emb.timeout.count());
            read(*e, "timeout_s", timeout);
            emb.timeout = std::chrono::seconds(timeout);
            read(*e, "batch", emb.batch);
            c.kg.embedding = std::move(emb);
        }
    }

    if (auto it = j.find("boost"); it != j.end()) {
        check_keys(*it, "boost", {"backend", "max_frames", "temperature"});
        read(*it, "backend", c.boost.backend);
        read(*it, "max_frames", c.boost.max_frames);
        read(*it, "temperature", c.boost.temperature);
    }

    if (auto it = j.find("judge"); it != j.end()) {
        check_keys(*it, "judge", {"backend", "temperature"});
        read(*it, "backend", c.judge.backend);
        read(*it, "temperature", c.judge.temperature);
    }

    if (auto it = j.find("filter"); it != j.end()) {
        check_keys(*it, "filter", {"stages", "comment_threshold", "classifier", "verifier", "temperature"});
        read(*it, "stages", c.filter.stages);
        read(*it, "comment_threshold", c.filter.comment_threshold);
        read(*it, "classifier", c.filter.classifier);
        read(*it, "verifier", c.filter.verifier);
        read(*it, "temperature", c.filter.temperature);
    }

    if (auto it = j.find("paths"); it != j.end()) {
        check_keys(*it, "paths",
                   {"manifest", "graph", "templates", "output_dir", "items", "records", "candidates", "votes"});
        read_path(*it, "manifest", c.paths.manifest, base_dir);
        read_path(*it, "graph", c.paths.graph, base_dir);
        read_path(*it, "templates", c.paths.templates, base_dir);
        read_path(*it, "output_dir", c.paths.output_dir, base_dir);
        read_path(*it, "items", c.paths.items, base_dir);
        read_path(*it, "records", c.paths.records, base_dir);
        read_path(*it, "candidates", c.paths.candidates, base_dir);
        read_path(*it, "votes", c.paths.votes, base_dir);
    }

    if (auto it = j.find("sweep"); it != j.end()) {
        check_keys(*it, "sweep", {"h", "z", "modes", "seed"});
        read(*it, "h", c.sweep.h);
        read(*it, "z", c.sweep.z);
        read(*it, "seed", c.sweep.seed);
        if (auto m = it->find("modes"); m != it->end()) {
            std::vector<std::string> names;
            read(*it, "modes", names);
            c.sweep.modes.clear();
            for (const auto& n : names) c.sweep.modes.push_back(mode_or_throw(n));
        }
    }

    if (auto it = j.find("retry"); it != j.end()) {
        check_keys(*it, "retry", {"max_attempts", "base_delay_ms"});
        read(*it, "max_attempts", c.retry.max_attempts);
        long long delay = c.retry.base_delay.count();
        read(*it, "base_delay_ms", delay);
        c.retry.base_delay = std::chrono::milliseconds(delay);
    }

    if (auto it = j.find("max_parallel"); it != j.end() && !it->is_null()) {
        std::size_t n = 0;
        read(j, "max_parallel", n);
        c.max_parallel = n;
    }

    c.validate();
    return c;
}

Config Config::from_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw InputError("config file " + path.string() + " is not valid JSON");
    return from_json(j, path.parent_path());
}

void Config::validate() const {
    if (kg.h < 1) throw InputError("config: kg.h must be >= 1");
    if (kg.z < 0) throw InputError("config: kg.z must be >= 0");
    if (kg.batch < 1) throw InputError("config: kg.batch must be >= 1");
    if (!(kg.similarity_threshold >= -1.0 && kg.similarity_threshold <= 1.0)) {
        throw InputError("config: kg.similarity_threshold must be within [-1, 1]");
    }
    check_temperature(boost.temperature, "boost.temperature");
    check_temperature(judge.temperature, "judge.temperature");
    check_temperature(filter.temperature, "filter.temperature");
    if (boost.max_frames < 1) throw InputError("config: boost.max_frames must be >= 1");
    if (max_parallel && *max_parallel < 1) throw InputError("config: max_parallel must be >= 1");
    if (retry.max_attempts < 1) throw InputError("config: retry.max_attempts must be >= 1");
    if (retry.base_delay.count() < 0) throw InputError("config: retry.base_delay_ms must be >= 0");
    for (const auto& [name, b] : backends) {
        if (b.max_parallel < 1) throw InputError("config: backends." + name + ".max_parallel must be >= 1");
        if (b.provider == "openai") {
            if (b.endpoint.empty() || b.model.empty()) {
                throw InputError("config: backends." + name + " needs endpoint and model");
            }
        } else if (b.provider == "mock") {
            if (b.fixture.empty()) throw InputError("config: backends." + name + " needs a fixture file");
        } else {
            throw InputError("config: backends." + name + " has unknown provider '" + b.provider + "'");
        }
    }
    for (int h : sweep.h) {
        if (h < 1) throw InputError("config: sweep.h values must be >= 1");
    }
    for (int z : sweep.z) {
        if (z < 0) throw InputError("config: sweep.z values must be >= 0");
    }
    if (sweep.h.empty() || sweep.z.empty() || sweep.modes.empty()) {
        throw InputError("config: sweep.h, sweep.z and sweep.modes must be non-empty");
    }
}

ResolvedBackend make_backend(const std::string& spec, const Config& config) {
    if (spec.empty()) throw InputError("no backend selected");
    ResolvedBackend out;
    if (spec.rfind("mock:", 0) == 0) {
        out.backend = FixtureBackend::from_file(spec.substr(5));
    } else {
        auto it = config.backends.find(spec);
        if (it == config.backends.end()) throw InputError("unknown backend '" + spec + "'");
        const BackendSpec& b = it->second;
        out.max_parallel = b.max_parallel;
        if (b.provider == "mock") {
            out.backend = FixtureBackend::from_file(b.fixture);
        } else {
            HttpBackendConfig http;
            http.name = b.name;
            http.endpoint = b.endpoint;
            http.model = b.model;
            http.api_key_env = b.api_key_env;
            http.timeout = std::chrono::seconds(b.timeout_s);
            http.max_tokens = b.max_tokens;
            out.backend = std::make_unique<HttpChatBackend>(std::move(http));
        }
    }
    if (config.max_parallel) out.max_parallel = *config.max_parallel;
    return out;
}

}  // namespace metakg::cli
