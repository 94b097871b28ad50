#pragma once

/** \file analyzer.hpp
 *  \brief Standard text analysis: UTF-8 aware word segmentation plus lowercasing.
 *
 * The analyzer is deliberately minimal: it segments on word boundaries,
 * lowercases ASCII and Latin-1 letters, and applies no stemming or stopword
 * removal. Interior apostrophes ("don't"), periods between alphanumerics
 * ("u.s.a", "3.14") and commas between digits ("3,000") do not split, which
 * mirrors conventional standard-analyzer behaviour for the common cases.
 *
 * Analysis is deterministic and total: any byte sequence yields a token list,
 * and re-analyzing the space-joined tokens yields the same tokens.
 */

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace hybridir {

struct Token {
    std::string term;        ///< lowercased surface form, never empty
    std::uint32_t position;  ///< 0-based ordinal within the field
};

/// Result of analyzing one field of text.
struct AnalyzedField {
    std::vector<Token> tokens;

    std::size_t length() const { return tokens.size(); }

    std::vector<std::string> terms() const {
        std::vector<std::string> out;
        out.reserve(tokens.size());
        for (const auto& t : tokens) out.push_back(t.term);
        return out;
    }
};

namespace detail {

struct Codepoint {
    std::uint32_t value;
    std::size_t bytes;  // bytes consumed; 0 means invalid byte (skip one)
};

inline Codepoint decode_utf8(std::string_view s, std::size_t i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) return {b0, 1};
    auto cont = [&](std::size_t off) {
        return i + off < s.size() &&
               (static_cast<unsigned char>(s[i + off]) & 0xC0) == 0x80;
    };
    if ((b0 & 0xE0) == 0xC0 && cont(1)) {
        std::uint32_t cp = (b0 & 0x1Fu) << 6 |
                           (static_cast<unsigned char>(s[i + 1]) & 0x3Fu);
        return {cp, 2};
    }
    if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
        std::uint32_t cp = (b0 & 0x0Fu) << 12 |
                           (static_cast<unsigned char>(s[i + 1]) & 0x3Fu) << 6 |
                           (static_cast<unsigned char>(s[i + 2]) & 0x3Fu);
        return {cp, 3};
    }
    if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
        std::uint32_t cp = (b0 & 0x07u) << 18 |
                           (static_cast<unsigned char>(s[i + 1]) & 0x3Fu) << 12 |
                           (static_cast<unsigned char>(s[i + 2]) & 0x3Fu) << 6 |
                           (static_cast<unsigned char>(s[i + 3]) & 0x3Fu);
        return {cp, 4};
    }
    return {0xFFFD, 0};
}

inline void encode_utf8(std::uint32_t cp, std::string& out) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

inline bool is_ascii_digit(std::uint32_t cp) { return cp >= '0' && cp <= '9'; }

inline bool is_ascii_alnum(std::uint32_t cp) {
    return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || is_ascii_digit(cp);
}

// Non-ASCII separators: the common Unicode space and punctuation blocks.
inline bool is_unicode_separator(std::uint32_t cp) {
    if (cp == 0x00A0 || cp == 0x1680 || cp == 0xFEFF) return true;
    if (cp >= 0x2000 && cp <= 0x206F) return cp != 0x2019;  // keep the curly apostrophe
    if (cp >= 0x3000 && cp <= 0x303F) return true;
    return false;
}

inline bool is_word_cp(std::uint32_t cp) {
    if (cp < 0x80) return is_ascii_alnum(cp);
    return !is_unicode_separator(cp);
}

inline bool is_letterish(std::uint32_t cp) {
    if (cp < 0x80) return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
    return is_word_cp(cp);
}

inline std::uint32_t to_lower_cp(std::uint32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;  // Latin-1 uppercase
    return cp;
}

}  // namespace detail

/** Analyze a string into lowercase tokens with contiguous positions.
 *
 * Never fails; empty input yields an empty token list.
 */
inline AnalyzedField analyze(std::string_view text) {
    using namespace detail;
    AnalyzedField out;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            out.tokens.push_back({std::move(current),
                                  static_cast<std::uint32_t>(out.tokens.size())});
            current = {};
        }
    };

    std::size_t i = 0;
    std::uint32_t prev_cp = 0;
    bool prev_is_word = false;
    while (i < text.size()) {
        auto [cp, len] = decode_utf8(text, i);
        if (len == 0) {  // invalid byte: treat as separator
            flush();
            prev_is_word = false;
            ++i;
            continue;
        }
        if (is_word_cp(cp)) {
            encode_utf8(to_lower_cp(cp), current);
            prev_cp = cp;
            prev_is_word = true;
            i += len;
            continue;
        }
        // Mid-token joiners need a word character on both sides.
        bool joined = false;
        if (prev_is_word && i + len < text.size()) {
            auto [next_cp, next_len] = decode_utf8(text, i + len);
            if (next_len > 0) {
                const bool apostrophe = (cp == '\'' || cp == 0x2019) &&
                                        is_letterish(prev_cp) && is_letterish(next_cp);
                const bool period = cp == '.' && is_word_cp(prev_cp) && is_word_cp(next_cp);
                const bool comma = cp == ',' && is_ascii_digit(prev_cp) && is_ascii_digit(next_cp);
                if (apostrophe || period || comma) {
                    encode_utf8(cp, current);
                    joined = true;
                }
            }
        }
        if (!joined) {
            flush();
            prev_is_word = false;
        }
        i += len;
    }
    flush();
    return out;
}

}  // namespace hybridir
