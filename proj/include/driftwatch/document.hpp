#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "driftwatch/timestamp.hpp"

namespace driftwatch {

// Half-open range of token indices.
struct TokenRange {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;

    auto operator<=>(const TokenRange&) const = default;
};

// A matched region of a document, in token indices.
struct TokenSpan {
    std::string doc_id;
    std::uint32_t begin = 0;
    std::uint32_t end = 0;  // exclusive

    auto operator<=>(const TokenSpan&) const = default;
};

namespace utf8 {

// Decodes the codepoint starting at byte `pos`; advances `pos` past it.
// Malformed bytes decode as U+FFFD and advance one byte.
inline char32_t decode(const std::string& s, std::size_t& pos) {
    const auto byte = [&](std::size_t i) {
        return static_cast<unsigned char>(s[i]);
    };
    const unsigned char b0 = byte(pos);
    if (b0 < 0x80) {
        ++pos;
        return b0;
    }
    int len = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        ++pos;
        return 0xFFFD;
    }
    if (pos + len > s.size()) {
        ++pos;
        return 0xFFFD;
    }
    for (int i = 1; i < len; ++i) {
        const unsigned char bi = byte(pos + i);
        if ((bi & 0xC0) != 0x80) {
            ++pos;
            return 0xFFFD;
        }
        cp = (cp << 6) | (bi & 0x3F);
    }
    pos += len;
    return cp;
}

inline void encode(char32_t cp, std::string& out) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

// Token characters are ASCII alphanumerics plus Latin-1 / Latin Extended
// letters (covers the French corpus this targets). Everything else separates.
inline bool is_word_char(char32_t cp) {
    if ((cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') ||
        (cp >= '0' && cp <= '9')) {
        return true;
    }
    if (cp >= 0x00C0 && cp <= 0x024F) {
        return cp != 0x00D7 && cp != 0x00F7;  // multiplication / division signs
    }
    return false;
}

// Lowercases ASCII, Latin-1 and Latin Extended-A; diacritics are preserved
// ("Pékin" and "pekin" stay distinct terms).
inline char32_t to_lower(char32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
    if (cp >= 0x00C0 && cp <= 0x00DE && cp != 0x00D7) return cp + 0x20;
    if (cp == 0x0130) return 'i';     // İ
    if (cp == 0x0178) return 0x00FF;  // Ÿ -> ÿ
    if ((cp >= 0x0100 && cp <= 0x0137) || (cp >= 0x014A && cp <= 0x0177)) {
        return (cp % 2 == 0) ? cp + 1 : cp;
    }
    if ((cp >= 0x0139 && cp <= 0x0148) || (cp >= 0x0179 && cp <= 0x017E)) {
        return (cp % 2 == 1) ? cp + 1 : cp;
    }
    return cp;
}

}  // namespace utf8

namespace detail {

struct RawToken {
    std::string text;         // lowercased
    std::size_t byte_begin = 0;
    std::size_t byte_end = 0;  // exclusive, in the source text
};

// Shared scanner for tokenize and sentence splitting. A token is a maximal
// run of word characters and internal hyphens; a hyphen is internal when a
// word character precedes it in the current token and another follows it.
inline std::vector<RawToken> scan_tokens(const std::string& text) {
    std::vector<RawToken> out;
    RawToken cur;
    bool in_token = false;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t start = pos;
        const char32_t cp = utf8::decode(text, pos);
        if (utf8::is_word_char(cp)) {
            if (!in_token) {
                in_token = true;
                cur = RawToken{};
                cur.byte_begin = start;
            }
            utf8::encode(utf8::to_lower(cp), cur.text);
            cur.byte_end = pos;
            continue;
        }
        if (cp == '-' && in_token && pos < text.size()) {
            std::size_t peek = pos;
            const char32_t next = utf8::decode(text, peek);
            if (utf8::is_word_char(next)) {
                cur.text += '-';
                cur.byte_end = pos;
                continue;
            }
        }
        if (in_token) {
            out.push_back(std::move(cur));
            in_token = false;
        }
    }
    if (in_token) out.push_back(std::move(cur));
    return out;
}

}  // namespace detail

// Lowercased word tokens of `text`; punctuation (including apostrophes)
// separates, hyphens between word characters do not.
inline std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    for (auto& t : detail::scan_tokens(text)) out.push_back(std::move(t.text));
    return out;
}

// Sentence ranges over `tokens`, which must be tokenize(text). A boundary
// falls after a token directly followed in the text by '.', '!' or '?' and
// then whitespace or end of text; the final range closes at the last token.
inline std::vector<TokenRange> split_sentences(const std::vector<std::string>& tokens,
                                               const std::string& text) {
    std::vector<TokenRange> ranges;
    if (tokens.empty()) return ranges;
    const auto raw = detail::scan_tokens(text);
    const auto is_space = [](char c) {
        return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
    };
    std::uint32_t start = 0;
    const std::uint32_t n = static_cast<std::uint32_t>(raw.size());
    for (std::uint32_t i = 0; i < n; ++i) {
        const std::size_t p = raw[i].byte_end;
        const bool terminator = p < text.size() &&
                                (text[p] == '.' || text[p] == '!' || text[p] == '?') &&
                                (p + 1 >= text.size() || is_space(text[p + 1]));
        if (terminator || i + 1 == n) {
            ranges.push_back({start, i + 1});
            start = i + 1;
        }
    }
    return ranges;
}

// One timestamped news item. Immutable after construction; tokens and
// sentences are always derived from title + " " + body.
struct Document {
    std::string id;
    Instant ts = 0;
    std::string title;
    std::string body;
    std::vector<std::string> tokens;
    std::vector<TokenRange> sentences;

    bool operator==(const Document&) const = default;
};

inline Document make_document(std::string id, Instant ts, std::string title,
                              std::string body) {
    Document d;
    d.id = std::move(id);
    d.ts = ts;
    d.title = std::move(title);
    d.body = std::move(body);
    const std::string full = d.title + " " + d.body;
    d.tokens = tokenize(full);
    d.sentences = split_sentences(d.tokens, full);
    return d;
}

// Term occurrence counts of a token sequence.
inline std::unordered_map<std::string, std::size_t> token_counts(
    const std::vector<std::string>& tokens) {
    std::unordered_map<std::string, std::size_t> counts;
    for (const auto& t : tokens) ++counts[t];
    return counts;
}

// count(term) / token count; 0 for an empty document.
inline double relative_frequency(const Document& d, const std::string& term) {
    if (d.tokens.empty()) return 0.0;
    std::size_t c = 0;
    for (const auto& t : d.tokens) {
        if (t == term) ++c;
    }
    return static_cast<double>(c) / static_cast<double>(d.tokens.size());
}

}  // namespace driftwatch
