#include "mathfind/text.hpp"

#include <algorithm>
#include <cctype>

namespace mathfind {

bool is_stopword(std::string_view word) {
    return std::find(kStopwords.begin(), kStopwords.end(), word) != kStopwords.end();
}

std::vector<TextToken> tokenize_text(std::string_view input) {
    auto word_byte = [](char c) {
        auto u = static_cast<unsigned char>(c);
        return u >= 0x80 || std::isalnum(u);
    };
    std::vector<TextToken> out;
    std::size_t i = 0;
    while (i < input.size()) {
        if (!word_byte(input[i])) {
            ++i;
            continue;
        }
        std::size_t start = i;
        std::size_t chars = 0;
        std::string word;
        while (i < input.size() && word_byte(input[i])) {
            auto u = static_cast<unsigned char>(input[i]);
            if ((u & 0xC0) != 0x80) ++chars;
            word.push_back(u < 0x80 ? static_cast<char>(std::tolower(u)) : input[i]);
            ++i;
        }
        if (chars < 2 || is_stopword(word)) continue;
        out.push_back({porter_stem(word), {start, i}, out.size()});
    }
    return out;
}

}  // namespace mathfind
