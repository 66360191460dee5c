// Porter, "An algorithm for suffix stripping", Program 14(3), 1980.
// Follows the published rule tables; the later reference-code departures
// (abli->able vs bli->ble, logi->log) are not applied.

#include <algorithm>
#include <string>
#include <string_view>

#include "mathfind/text.hpp"

namespace mathfind {

namespace {

class PorterStemmer {
public:
    explicit PorterStemmer(std::string_view word) : b_(word) {}

    std::string run() {
        step1a();
        step1b();
        step1c();
        step2();
        step3();
        step4();
        step5a();
        step5b();
        return std::move(b_);
    }

private:
    bool consonant(std::size_t i) const {
        switch (b_[i]) {
            case 'a': case 'e': case 'i': case 'o': case 'u': return false;
            case 'y': return i == 0 || !consonant(i - 1);
            default: return true;
        }
    }

    // Measure of b_[0, len): the m in [C](VC)^m[V].
    int measure(std::size_t len) const {
        int m = 0;
        std::size_t i = 0;
        while (i < len && consonant(i)) ++i;
        while (i < len) {
            while (i < len && !consonant(i)) ++i;
            if (i >= len) break;
            while (i < len && consonant(i)) ++i;
            ++m;
        }
        return m;
    }

    bool has_vowel(std::size_t len) const {
        for (std::size_t i = 0; i < len; ++i)
            if (!consonant(i)) return true;
        return false;
    }

    bool double_consonant(std::size_t len) const {
        return len >= 2 && b_[len - 1] == b_[len - 2] && consonant(len - 1);
    }

    // cvc where the final c is not w, x or y.
    bool cvc(std::size_t len) const {
        if (len < 3 || !consonant(len - 1) || consonant(len - 2) || !consonant(len - 3))
            return false;
        char c = b_[len - 1];
        return c != 'w' && c != 'x' && c != 'y';
    }

    bool ends(std::string_view s) const {
        return b_.size() >= s.size() && std::string_view(b_).substr(b_.size() - s.size()) == s;
    }

    std::size_t stem_len(std::string_view suffix) const { return b_.size() - suffix.size(); }

    void replace_suffix(std::string_view suffix, std::string_view with) {
        b_.resize(stem_len(suffix));
        b_ += with;
    }

    struct Rule {
        std::string_view suffix;
        std::string_view replacement;
    };

    // Applies the longest matching rule when the remaining stem has m > min_m.
    template <std::size_t N>
    void apply_longest(const Rule (&rules)[N], int min_m) {
        const Rule* best = nullptr;
        for (const auto& r : rules)
            if (ends(r.suffix) && (!best || r.suffix.size() > best->suffix.size())) best = &r;
        if (best && measure(stem_len(best->suffix)) > min_m)
            replace_suffix(best->suffix, best->replacement);
    }

    void step1a() {
        if (ends("sses"))
            replace_suffix("sses", "ss");
        else if (ends("ies"))
            replace_suffix("ies", "i");
        else if (ends("ss"))
            return;
        else if (ends("s"))
            replace_suffix("s", "");
    }

    void step1b() {
        if (ends("eed")) {
            if (measure(stem_len("eed")) > 0) replace_suffix("eed", "ee");
            return;
        }
        std::string_view suffix;
        if (ends("ed"))
            suffix = "ed";
        else if (ends("ing"))
            suffix = "ing";
        else
            return;
        if (!has_vowel(stem_len(suffix))) return;
        replace_suffix(suffix, "");

        if (ends("at") || ends("bl") || ends("iz")) {
            b_ += 'e';
        } else if (double_consonant(b_.size())) {
            char last = b_.back();
            if (last != 'l' && last != 's' && last != 'z') b_.pop_back();
        } else if (measure(b_.size()) == 1 && cvc(b_.size())) {
            b_ += 'e';
        }
    }

    void step1c() {
        if (ends("y") && has_vowel(b_.size() - 1)) b_.back() = 'i';
    }

    void step2() {
        static constexpr Rule rules[] = {
            {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"},   {"anci", "ance"},
            {"izer", "ize"},    {"abli", "able"},   {"alli", "al"},     {"entli", "ent"},
            {"eli", "e"},       {"ousli", "ous"},   {"ization", "ize"}, {"ation", "ate"},
            {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"}, {"fulness", "ful"},
            {"ousness", "ous"}, {"aliti", "al"},    {"iviti", "ive"},   {"biliti", "ble"}};
        apply_longest(rules, 0);
    }

    void step3() {
        static constexpr Rule rules[] = {{"icate", "ic"}, {"ative", ""}, {"alize", "al"},
                                         {"iciti", "ic"}, {"ical", "ic"}, {"ful", ""},
                                         {"ness", ""}};
        apply_longest(rules, 0);
    }

    void step4() {
        static constexpr std::string_view suffixes[] = {
            "al",  "ance", "ence", "er",  "ic",  "able", "ible", "ant", "ement", "ment",
            "ent", "ion",  "ou",   "ism", "ate", "iti",  "ous",  "ive", "ize"};
        std::string_view best;
        for (auto s : suffixes)
            if (ends(s) && s.size() > best.size()) best = s;
        if (best.empty()) return;
        std::size_t len = stem_len(best);
        if (measure(len) <= 1) return;
        if (best == "ion" && !(len > 0 && (b_[len - 1] == 's' || b_[len - 1] == 't'))) return;
        b_.resize(len);
    }

    void step5a() {
        if (!ends("e")) return;
        std::size_t len = b_.size() - 1;
        int m = measure(len);
        if (m > 1 || (m == 1 && !cvc(len))) b_.pop_back();
    }

    void step5b() {
        if (measure(b_.size()) > 1 && double_consonant(b_.size()) && b_.back() == 'l')
            b_.pop_back();
    }

    std::string b_;
};

}  // namespace

std::string porter_stem(std::string_view word) {
    if (word.empty() ||
        !std::all_of(word.begin(), word.end(), [](char c) { return c >= 'a' && c <= 'z'; }))
        return std::string(word);
    return PorterStemmer(word).run();
}

}  // namespace mathfind
