#include "metakg/templates.hpp"

#include <fstream>
#include <iterator>

#include "metakg/error.hpp"

namespace metakg {

TemplateSet TemplateSet::defaults() {
    TemplateSet t;
    t.set("extract", R"(Task: extract metaphorical concept pairs.
Read the text below and list every metaphor it contains as a pair of concepts:
the source concept (the concrete thing used as the vehicle) and the target
concept (the idea it stands for). Answer with a JSON array only, for example
[{"source": "river", "target": "time"}]. Answer [] when there is no metaphor.

Text:
{{text}})");
    t.set("translate", R"(Task: translate into English.
Translate the text below into fluent English. Keep every figure of speech.
Answer with the translation only.

Text:
{{text}})");
    t.set("identify", R"(Task: identify visual elements.
The attached frames come from a short video titled "{{title}}".
List every concrete visual element that appears (objects, people, animals,
actions, colors, settings). Answer with a JSON array of short keywords only,
for example ["pig", "banquet", "cat"].)");
    t.set("generate", R"(Task: interpret the video metaphor.
The attached frames come from a short video titled "{{title}}".
{{references}}
Think about which visual elements carry which implicit meanings, then state
the interpretation in the form: <visual element> conveys <implicit meaning>.)");
    t.set("baseline", R"(Task: interpret the video metaphor.
The attached frames come from a short video titled "{{title}}".
Think about which visual elements carry which implicit meanings, then state
the interpretation in the form: <visual element> conveys <implicit meaning>.)");
    t.set("judge", R"(Task: score a video metaphor interpretation.
Video title: {{title}}

Reference interpretation:
{{golden}}

Candidate interpretation:
{{candidate}}

Compare the candidate with the reference. Judge whether it grounds the same
metaphorical visual elements and reveals the same implicit meanings. Give a
short rationale, then a final line of the form "Score: N" where N is an
integer from 0 to 10.)");
    t.set("filter_llm", R"(Task: decide whether a video contains metaphorical logic.
Video introduction:
{{intro}}

Speech transcript:
{{asr}}

Audience comments:
{{comments}}

Does the video express a definite metaphor (a concrete element standing for an
abstract meaning)? Answer with JSON {"verdict": "yes" | "no", "rationale": "..."}.)");
    t.set("filter_mllm", R"(Task: verify a metaphor analysis against the video.
Video introduction:
{{intro}}

Speech transcript:
{{asr}}

Audience comments:
{{comments}}

Earlier text-only analysis:
{{analysis}}

Look at the attached frames. Is the analysis consistent with what the video
actually shows? Answer with JSON {"verdict": "yes" | "no", "rationale": "..."}.)");
    return t;
}

TemplateSet TemplateSet::load(const std::filesystem::path& dir) {
    TemplateSet t = defaults();
    if (!std::filesystem::is_directory(dir)) throw InputError("templates directory not found: " + dir.string());
    const TemplateSet builtin = defaults();
    for (const auto& [stage, text] : builtin.all()) {
        auto file = dir / (stage + ".txt");
        if (!std::filesystem::exists(file)) continue;
        std::ifstream in(file, std::ios::binary);
        if (!in) throw InputError("cannot read template " + file.string());
        std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        while (!content.empty() && (content.back() == '\n' || content.back() == '\r')) content.pop_back();
        t.set(stage, std::move(content));
    }
    return t;
}

const std::string& TemplateSet::get(std::string_view stage) const {
    auto it = templates_.find(stage);
    if (it == templates_.end()) throw InvariantError("no template for stage " + std::string(stage));
    return it->second;
}

}  // namespace metakg
