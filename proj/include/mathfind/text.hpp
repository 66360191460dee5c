#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "mathfind/mathml.hpp"

namespace mathfind {

struct TextToken {
    std::string term;
    ByteSpan raw_span;
    std::size_t position = 0;
};

/// Dropped before stemming.
inline constexpr std::array<std::string_view, 30> kStopwords = {
    "a",    "an",  "and",   "are",   "as",    "at",   "be",   "but", "by",   "for",
    "if",   "in",  "into",  "is",    "it",    "no",   "not",  "of",  "on",   "or",
    "that", "the", "their", "there", "these", "they", "this", "to",  "was",  "with"};

bool is_stopword(std::string_view lowercase_word);

/// The original Porter (1980) suffix-stripping stemmer. Input must be
/// lowercase ASCII letters; anything else is returned unchanged.
std::string porter_stem(std::string_view word);

/// Splits on non-alphanumeric boundaries, lowercases, drops short tokens and
/// stopwords, and stems. Bytes >= 0x80 count as word characters; such tokens
/// are kept unstemmed.
std::vector<TextToken> tokenize_text(std::string_view input);

}  // namespace mathfind
