#include "mathfind/document.hpp"

#include <cctype>
#include <filesystem>

#include "mathfind/canonicalize.hpp"
#include "mathfind/text.hpp"

namespace mathfind {

namespace {

bool istarts_with(std::string_view s, std::size_t at, std::string_view prefix) {
    if (s.size() - at < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i)
        if (std::tolower(static_cast<unsigned char>(s[at + i])) != prefix[i]) return false;
    return true;
}

std::size_t ifind(std::string_view s, std::string_view needle, std::size_t from) {
    for (std::size_t i = from; i + needle.size() <= s.size(); ++i)
        if (istarts_with(s, i, needle)) return i;
    return std::string_view::npos;
}

bool name_end(std::string_view s, std::size_t at) {
    if (at >= s.size()) return true;
    char c = s[at];
    return !(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == ':' || c == '_');
}

// Length of an entity reference starting at `at` ('&'), or 0.
std::size_t entity_length(std::string_view s, std::size_t at) {
    std::size_t i = at + 1;
    if (i < s.size() && s[i] == '#') ++i;
    std::size_t start = i;
    while (i < s.size() && i - at < 32 && std::isalnum(static_cast<unsigned char>(s[i]))) ++i;
    if (i == start || i >= s.size() || s[i] != ';') return 0;
    return i + 1 - at;
}

void blank(std::string& s, std::size_t from, std::size_t to) {
    for (std::size_t i = from; i < to && i < s.size(); ++i) s[i] = ' ';
}

std::string decode_entity(std::string_view ref) {
    std::string_view name = ref.substr(1, ref.size() - 2);
    if (name == "amp") return "&";
    if (name == "lt") return "<";
    if (name == "gt") return ">";
    if (name == "quot") return "\"";
    if (name == "apos") return "'";
    if (name == "nbsp") return " ";
    if (!name.empty() && name[0] == '#') {
        bool hex = name.size() > 1 && (name[1] == 'x' || name[1] == 'X');
        std::string digits(name.substr(hex ? 2 : 1));
        try {
            unsigned long cp = std::stoul(digits, nullptr, hex ? 16 : 10);
            if (cp > 0 && cp <= 0x10FFFF) {
                std::string out;
                append_utf8(out, static_cast<char32_t>(cp));
                return out;
            }
        } catch (const std::exception&) {
        }
    }
    return std::string(ref);
}

// Visible text of a markup fragment: math removed, tags dropped, entities
// decoded, whitespace collapsed.
std::string plain_text(std::string_view fragment) {
    std::string without_math(fragment);
    for (const auto& span : find_math_islands(fragment)) blank(without_math, span.start, span.end);
    std::string out;
    bool space = false;
    auto emit = [&](std::string_view piece) {
        for (char c : piece) {
            if (std::isspace(static_cast<unsigned char>(c))) {
                space = !out.empty();
                continue;
            }
            if (space) out.push_back(' ');
            space = false;
            out.push_back(c);
        }
    };
    std::string_view s = without_math;
    for (std::size_t i = 0; i < s.size();) {
        if (s[i] == '<') {
            auto close = s.find('>', i);
            if (close == std::string_view::npos) break;
            emit(" ");
            i = close + 1;
        } else if (std::size_t n = s[i] == '&' ? entity_length(s, i) : 0) {
            emit(decode_entity(s.substr(i, n)));
            i += n;
        } else {
            emit(s.substr(i, 1));
            ++i;
        }
    }
    return out;
}

std::string element_text(std::string_view body, std::string_view tag) {
    std::string open = "<" + std::string(tag);
    for (std::size_t at = ifind(body, open, 0); at != std::string_view::npos;
         at = ifind(body, open, at + 1)) {
        if (!name_end(body, at + open.size())) continue;
        auto gt = body.find('>', at);
        if (gt == std::string_view::npos) return {};
        auto end = ifind(body, "</" + std::string(tag), gt + 1);
        if (end == std::string_view::npos) return {};
        return plain_text(body.substr(gt + 1, end - gt - 1));
    }
    return {};
}

}  // namespace

std::string host_text_view(std::string_view body) {
    std::string out(body);
    for (const auto& span : find_math_islands(body)) blank(out, span.start, span.end);
    std::string_view s = out;
    std::size_t i = 0;
    while (i < s.size()) {
        if (s[i] == '&') {
            if (std::size_t n = entity_length(s, i)) {
                blank(out, i, i + n);
                i += n;
                continue;
            }
            ++i;
            continue;
        }
        if (s[i] != '<' || i + 1 >= s.size()) {
            ++i;
            continue;
        }
        if (s.compare(i, 4, "<!--") == 0) {
            auto end = s.find("-->", i + 4);
            std::size_t stop = end == std::string_view::npos ? s.size() : end + 3;
            blank(out, i, stop);
            i = stop;
            continue;
        }
        bool raw_text = false;
        std::string_view raw_tag;
        for (std::string_view tag : {"script", "style"}) {
            if (istarts_with(s, i + 1, tag) && name_end(s, i + 1 + tag.size())) {
                raw_text = true;
                raw_tag = tag;
            }
        }
        if (raw_text) {
            auto end = ifind(s, "</" + std::string(raw_tag), i + 1);
            std::size_t stop = end == std::string_view::npos ? s.size() : s.find('>', end);
            stop = stop == std::string_view::npos ? s.size() : stop + 1;
            blank(out, i, stop);
            i = stop;
            continue;
        }
        char next = s[i + 1];
        if (std::isalpha(static_cast<unsigned char>(next)) || next == '/' || next == '!' ||
            next == '?') {
            auto close = s.find('>', i);
            std::size_t stop = close == std::string_view::npos ? s.size() : close + 1;
            blank(out, i, stop);
            i = stop;
            continue;
        }
        ++i;
    }
    return out;
}

std::string extract_title(std::string_view body, std::string_view fallback) {
    std::string title = element_text(body, "title");
    if (title.empty()) title = element_text(body, "h1");
    if (title.empty()) title = std::string(fallback);
    return title;
}

DocumentInput prepare_document(std::string path, std::string body, const PipelineConfig& config,
                               HostFormat format) {
    DocumentInput doc;
    auto formulae = extract_formulae(body, format);
    for (auto& f : formulae) {
        f.root = canonicalize(std::move(f.root));
        auto tokens = tokenize_formula(f, config);
        doc.math_tokens.insert(doc.math_tokens.end(), std::make_move_iterator(tokens.begin()),
                               std::make_move_iterator(tokens.end()));
        if (doc.formula_spans.empty() || doc.formula_spans.back() != f.doc_span)
            doc.formula_spans.push_back(f.doc_span);
    }
    doc.text_tokens = tokenize_text(host_text_view(body));
    doc.title = extract_title(body, std::filesystem::path(path).stem().string());
    doc.path = std::move(path);
    doc.body = std::move(body);
    return doc;
}

}  // namespace mathfind
