#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace metakg {

/// Prompt templates by stage name. Placeholders use {{name}}:
///   extract      {{text}}
///   translate    {{text}}
///   identify     {{title}}
///   generate     {{title}} {{references}}
///   baseline     {{title}}
///   judge        {{title}} {{golden}} {{candidate}}
///   filter_llm   {{intro}} {{asr}} {{comments}}
///   filter_mllm  {{intro}} {{asr}} {{comments}} {{analysis}}
class TemplateSet {
public:
    /// Built-in wording for every stage.
    static TemplateSet defaults();
    /// Defaults overridden by `<dir>/<stage>.txt` where present.
    static TemplateSet load(const std::filesystem::path& dir);

    [[nodiscard]] const std::string& get(std::string_view stage) const;
    void set(std::string stage, std::string text) { templates_[std::move(stage)] = std::move(text); }
    [[nodiscard]] const std::map<std::string, std::string, std::less<>>& all() const noexcept { return templates_; }

private:
    std::map<std::string, std::string, std::less<>> templates_;
};

}  // namespace metakg
