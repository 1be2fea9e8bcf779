#include "metakg/corpus.hpp"

#include <algorithm>
#include <fstream>

#include <spdlog/spdlog.h>

#include "metakg/error.hpp"

namespace metakg {

DatasetManifest DatasetManifest::from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) throw InputError("manifest must be a JSON object of dataset name -> settings");
    DatasetManifest m;
    for (const auto& [name, spec] : j.items()) {
        if (!spec.is_object() || !spec.contains("path") || !spec["path"].is_string()) {
            throw InputError("manifest dataset '" + name + "' needs a string 'path'");
        }
        DatasetSpec d;
        d.name = name;
        d.path = spec["path"].get<std::string>();
        if (d.path.is_relative() && !base_dir.empty()) d.path = base_dir / d.path;
        d.text_field = spec.value("text_field", std::string("text"));
        d.translate = spec.value("translate", false);
        if (d.text_field.empty()) throw InputError("manifest dataset '" + name + "' has empty text_field");
        m.datasets.push_back(std::move(d));
    }
    std::sort(m.datasets.begin(), m.datasets.end(),
              [](const DatasetSpec& a, const DatasetSpec& b) { return a.name < b.name; });
    return m;
}

DatasetManifest DatasetManifest::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open manifest " + path.string());
    try {
        return from_json(nlohmann::json::parse(in), path.parent_path());
    } catch (const nlohmann::json::exception& e) {
        throw InputError("manifest " + path.string() + ": " + e.what());
    }
}

CorpusLoad load_corpus(const DatasetManifest& manifest) {
    CorpusLoad out;
    for (const auto& ds : manifest.datasets) {
        std::ifstream in(ds.path, std::ios::binary);
        if (!in) throw InputError("dataset '" + ds.name + "': cannot open " + ds.path.string());
        std::size_t count = 0;
        std::size_t line_no = 0;
        std::string line;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            nlohmann::json obj;
            try {
                obj = nlohmann::json::parse(line);
            } catch (const nlohmann::json::exception&) {
                out.skipped.push_back({ds.name, line_no, "not valid JSON"});
                continue;
            }
            if (!obj.is_object()) {
                out.skipped.push_back({ds.name, line_no, "not a JSON object"});
                continue;
            }
            auto it = obj.find(ds.text_field);
            if (it == obj.end()) {
                throw InputError("dataset '" + ds.name + "' line " + std::to_string(line_no) +
                                 ": missing required field '" + ds.text_field + "'");
            }
            if (!it->is_string() || it->get_ref<const std::string&>().empty()) {
                out.skipped.push_back({ds.name, line_no, "empty or non-string text"});
                continue;
            }
            out.docs.push_back({ds.name + "#" + std::to_string(line_no), it->get<std::string>(),
                                ds.translate ? Lang::other : Lang::en, ds.name});
            ++count;
        }
        out.per_dataset[ds.name] = count;
        spdlog::info("dataset {}: {} docs", ds.name, count);
    }
    if (!out.skipped.empty()) spdlog::warn("{} corpus lines skipped", out.skipped.size());
    return out;
}

}  // namespace metakg
