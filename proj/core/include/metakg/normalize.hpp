#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace metakg {

/// Canonical form of a concept label: NFC, full Unicode lowercase, runs of
/// whitespace collapsed to a single ASCII space, leading/trailing punctuation
/// and whitespace removed. Idempotent. Returns "" when nothing survives;
/// callers must treat "" as a rejected label.
std::string normalize_label(std::string_view raw);

/// Space-separated tokens of an already-normalized label.
std::vector<std::string> label_tokens(std::string_view normalized);

}  // namespace metakg
