#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace metakg {

/// The eight video-metaphor categories, in report column order.
enum class MetaphorType {
    body_language,
    atmosphere_language,
    cultural_symbol,
    naturalistic_symbol,
    causal_montage,
    analogical_montage,
    surreal_narrative,
    performative_narrative,
};

inline constexpr std::size_t kMetaphorTypeCount = 8;

inline constexpr std::array<MetaphorType, kMetaphorTypeCount> kAllMetaphorTypes = {
    MetaphorType::body_language,      MetaphorType::atmosphere_language, MetaphorType::cultural_symbol,
    MetaphorType::naturalistic_symbol, MetaphorType::causal_montage,     MetaphorType::analogical_montage,
    MetaphorType::surreal_narrative,  MetaphorType::performative_narrative,
};

/// snake_case identifier, e.g. "body_language".
std::string_view metaphor_type_id(MetaphorType t) noexcept;
/// Display name, e.g. "Body Language".
std::string_view metaphor_type_name(MetaphorType t) noexcept;
/// Column header, e.g. "Body L.".
std::string_view metaphor_type_short(MetaphorType t) noexcept;

/// Accepts the id, display name or short header, case-insensitively.
std::optional<MetaphorType> parse_metaphor_type(std::string_view text);

}  // namespace metakg
