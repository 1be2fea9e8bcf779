#include "metakg/taxonomy.hpp"

#include <algorithm>
#include <cctype>

namespace metakg {
namespace {

struct Names {
    std::string_view id, name, abbrev;
};

constexpr std::array<Names, kMetaphorTypeCount> kNames = {{
    {"body_language", "Body Language", "Body L."},
    {"atmosphere_language", "Atmosphere Language", "Atmosph. L."},
    {"cultural_symbol", "Cultural Symbol", "Cultural S."},
    {"naturalistic_symbol", "Naturalistic Symbol", "Natural. S."},
    {"causal_montage", "Causal Montage", "Causal M."},
    {"analogical_montage", "Analogical Montage", "Analog. M."},
    {"surreal_narrative", "Surreal Narrative", "Surreal N."},
    {"performative_narrative", "Performative Narrative", "Perform. N."},
}};

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
           });
}

}  // namespace

std::string_view metaphor_type_id(MetaphorType t) noexcept { return kNames[static_cast<std::size_t>(t)].id; }
std::string_view metaphor_type_name(MetaphorType t) noexcept { return kNames[static_cast<std::size_t>(t)].name; }
std::string_view metaphor_type_short(MetaphorType t) noexcept { return kNames[static_cast<std::size_t>(t)].abbrev; }

std::optional<MetaphorType> parse_metaphor_type(std::string_view text) {
    for (std::size_t i = 0; i < kNames.size(); ++i) {
        const auto& n = kNames[i];
        if (iequals(text, n.id) || iequals(text, n.name) || iequals(text, n.abbrev)) {
            return static_cast<MetaphorType>(i);
        }
    }
    return std::nullopt;
}

}  // namespace metakg
