#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "metakg/normalize.hpp"

using metakg::label_tokens;
using metakg::normalize_label;

namespace {

std::string utf8(const std::u32string& s) {
    std::string out;
    for (char32_t c : s) {
        if (c < 0x80) {
            out += static_cast<char>(c);
        } else if (c < 0x800) {
            out += static_cast<char>(0xC0 | (c >> 6));
            out += static_cast<char>(0x80 | (c & 0x3F));
        } else if (c < 0x10000) {
            out += static_cast<char>(0xE0 | (c >> 12));
            out += static_cast<char>(0x80 | ((c >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (c & 0x3F));
        } else {
            out += static_cast<char>(0xF0 | (c >> 18));
            out += static_cast<char>(0x80 | ((c >> 12) & 0x3F));
            out += static_cast<char>(0x80 | ((c >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (c & 0x3F));
        }
    }
    return out;
}

// Character classes for the reference, restricted to an alphabet whose
// properties are unambiguous: precomposed letters only, so NFC is a no-op.
const std::u32string kUpper = U"ABCDEFGHIJKLMNOPQRSTUVWXYZÉÜÑ";
const std::u32string kLower = U"abcdefghijklmnopqrstuvwxyzéüñ";
const std::u32string kDigits = U"0123456789";
const std::u32string kSpace = U" \t\n\r 　";
const std::u32string kPunct = U"!\"#%&'()*,-./:;?@[\\]_{}“”‘’«»…—¡¿";

bool is_space(char32_t c) { return kSpace.find(c) != std::u32string::npos; }
bool is_punct(char32_t c) { return kPunct.find(c) != std::u32string::npos; }

std::u32string reference(const std::u32string& in) {
    std::u32string lowered;
    for (char32_t c : in) {
        auto p = kUpper.find(c);
        lowered += p == std::u32string::npos ? c : kLower[p];
    }
    std::u32string collapsed;
    bool gap = false;
    for (char32_t c : lowered) {
        if (is_space(c)) {
            gap = true;
            continue;
        }
        if (gap && !collapsed.empty()) collapsed += U' ';
        gap = false;
        collapsed += c;
    }
    std::size_t b = 0;
    std::size_t e = collapsed.size();
    while (b < e && (is_space(collapsed[b]) || is_punct(collapsed[b]))) ++b;
    while (e > b && (is_space(collapsed[e - 1]) || is_punct(collapsed[e - 1]))) --e;
    return collapsed.substr(b, e - b);
}

std::u32string random_text(std::mt19937_64& rng) {
    const std::u32string alphabet = kUpper + kLower + kDigits + kSpace + kPunct;
    std::uniform_int_distribution<std::size_t> len(0, 14);
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    std::u32string s;
    for (std::size_t i = len(rng); i > 0; --i) s += alphabet[pick(rng)];
    return s;
}

}  // namespace

TEST(NormalizeLabel, CaseAndWhitespace) { EXPECT_EQ(normalize_label("  The River  "), "the river"); }

TEST(NormalizeLabel, Fixpoint) { EXPECT_EQ(normalize_label("river"), "river"); }

TEST(NormalizeLabel, CurlyQuotesAndBangAreStripped) {
    EXPECT_EQ(normalize_label("“Storm!”"), "storm");
    EXPECT_EQ(utf8(reference(U"“Storm!”")), "storm");
}

TEST(NormalizeLabel, InteriorPunctuationStays) {
    EXPECT_EQ(normalize_label("rock-and-roll"), "rock-and-roll");
    EXPECT_EQ(normalize_label("  (the   ship's\twheel) "), "the ship's wheel");
}

TEST(NormalizeLabel, EmptyResults) {
    EXPECT_EQ(normalize_label(""), "");
    EXPECT_EQ(normalize_label("   "), "");
    EXPECT_EQ(normalize_label("?!…"), "");
}

TEST(NormalizeLabel, ComposesToNfc) {
    // "e" + combining acute becomes the precomposed letter.
    EXPECT_EQ(normalize_label("Café"), "café");
    EXPECT_EQ(normalize_label("CAFÉ"), "café");
}

TEST(NormalizeLabel, NonLatinLowercase) {
    EXPECT_EQ(normalize_label("ΣΟΦΊΑ"), normalize_label("σοφία"));
    EXPECT_EQ(normalize_label("  时间 "), "时间");
}

TEST(NormalizeLabel, MatchesCharacterLevelReference) {
    std::mt19937_64 rng(20240611);
    for (int i = 0; i < 5000; ++i) {
        const auto text = random_text(rng);
        ASSERT_EQ(normalize_label(utf8(text)), utf8(reference(text))) << "input: " << utf8(text);
    }
}

TEST(NormalizeLabel, Idempotent) {
    std::mt19937_64 rng(7);
    const std::vector<std::string> extras = {"́", "İ", "ẞ", "ﬁ", "Å", "Ω"};
    std::uniform_int_distribution<std::size_t> pick(0, extras.size() - 1);
    for (int i = 0; i < 3000; ++i) {
        std::string s = utf8(random_text(rng)) + extras[pick(rng)] + utf8(random_text(rng));
        const std::string once = normalize_label(s);
        ASSERT_EQ(normalize_label(once), once) << "input: " << s;
    }
}

TEST(LabelTokens, SplitsOnSingleSpaces) {
    EXPECT_EQ(label_tokens("red sky at night"), (std::vector<std::string>{"red", "sky", "at", "night"}));
    EXPECT_TRUE(label_tokens("").empty());
}
