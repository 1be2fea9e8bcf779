#include "metakg/normalize.hpp"

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "metakg/error.hpp"

namespace metakg {
namespace {

const icu::Normalizer2& nfc() {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status) || n == nullptr) {
        throw InvariantError("ICU NFC normalizer unavailable");
    }
    return *n;
}

icu::UnicodeString to_nfc(const icu::UnicodeString& s) {
    UErrorCode status = U_ZERO_ERROR;
    icu::UnicodeString out = nfc().normalize(s, status);
    if (U_FAILURE(status)) {
        throw InvariantError("NFC normalization failed");
    }
    return out;
}

bool is_space(UChar32 c) {
    return u_isUWhiteSpace(c) || u_iscntrl(c);
}

bool is_edge_strip(UChar32 c) {
    return is_space(c) || u_ispunct(c);
}

}  // namespace

std::string normalize_label(std::string_view raw) {
    icu::UnicodeString text = icu::UnicodeString::fromUTF8(
        icu::StringPiece(raw.data(), static_cast<int32_t>(raw.size())));
    text = to_nfc(text);
    text.toLower(icu::Locale::getRoot());

    // Collapse whitespace and control runs to one space.
    icu::UnicodeString collapsed;
    bool pending_space = false;
    for (int32_t i = 0; i < text.length();) {
        UChar32 c = text.char32At(i);
        i += U16_LENGTH(c);
        if (is_space(c)) {
            pending_space = true;
            continue;
        }
        if (pending_space && !collapsed.isEmpty()) {
            collapsed.append(static_cast<UChar>(0x20));
        }
        pending_space = false;
        collapsed.append(c);
    }

    int32_t begin = 0;
    int32_t end = collapsed.length();
    while (begin < end) {
        UChar32 c = collapsed.char32At(begin);
        if (!is_edge_strip(c)) break;
        begin += U16_LENGTH(c);
    }
    while (end > begin) {
        int32_t prev = collapsed.moveIndex32(end, -1);
        if (!is_edge_strip(collapsed.char32At(prev))) break;
        end = prev;
    }

    icu::UnicodeString trimmed = to_nfc(collapsed.tempSubStringBetween(begin, end));
    std::string out;
    trimmed.toUTF8String(out);
    return out;
}

std::vector<std::string> label_tokens(std::string_view normalized) {
    std::vector<std::string> tokens;
    std::size_t pos = 0;
    while (pos < normalized.size()) {
        std::size_t next = normalized.find(' ', pos);
        if (next == std::string_view::npos) next = normalized.size();
        if (next > pos) tokens.emplace_back(normalized.substr(pos, next - pos));
        pos = next + 1;
    }
    return tokens;
}

}  // namespace metakg
