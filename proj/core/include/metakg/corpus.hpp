#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace metakg {

enum class Lang { en, other };

struct CorpusDoc {
    std::string doc_id;  ///< "<dataset>#<line-number>"
    std::string text;
    Lang lang = Lang::en;
    std::string dataset;
};

struct DatasetSpec {
    std::string name;
    std::filesystem::path path;
    std::string text_field = "text";
    bool translate = false;
};

/// Dataset name -> {path, text_field, translate}. Relative paths resolve
/// against the manifest file's directory.
struct DatasetManifest {
    std::vector<DatasetSpec> datasets;  ///< sorted by name

    static DatasetManifest from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
    static DatasetManifest from_file(const std::filesystem::path& path);
};

struct LoadSkip {
    std::string dataset;
    std::size_t line = 0;
    std::string reason;
};

struct CorpusLoad {
    std::vector<CorpusDoc> docs;
    std::map<std::string, std::size_t> per_dataset;
    std::vector<LoadSkip> skipped;
};

/// Reads every dataset as JSON Lines. Lines that are not JSON objects or
/// carry an empty text are skipped and reported; an object without the
/// configured text field is an InputError (the mapping is wrong).
CorpusLoad load_corpus(const DatasetManifest& manifest);

}  // namespace metakg
