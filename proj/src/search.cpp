#include "mathfind/search.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "mathfind/canonicalize.hpp"
#include "mathfind/error.hpp"
#include "mathfind/latex.hpp"
#include "mathfind/text.hpp"

namespace mathfind {

namespace {

struct MathSegment {
    ByteSpan span;     // including delimiters
    ByteSpan content;  // fragment only
};

std::vector<MathSegment> latex_segments(std::string_view input) {
    std::vector<MathSegment> out;
    std::size_t i = 0;
    while (i < input.size()) {
        if (input[i] == '\\' && i + 1 < input.size() && input[i + 1] == '$') {
            i += 2;
            continue;
        }
        if (input[i] != '$') {
            ++i;
            continue;
        }
        std::string_view delim = input.substr(i, 2) == "$$" ? "$$" : "$";
        std::size_t open = i;
        std::size_t content = i + delim.size();
        std::size_t close = content;
        while (close < input.size()) {
            if (input[close] == '\\' && close + 1 < input.size()) {
                close += 2;
                continue;
            }
            if (input.substr(close, delim.size()) == delim) break;
            ++close;
        }
        if (close >= input.size()) throw UnbalancedGroup(open);
        out.push_back({{open, close + delim.size()}, {content, close}});
        i = close + delim.size();
    }
    return out;
}

bool blank_fragment(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

void append_math_terms(Query& q, Formula formula, const PipelineConfig& config) {
    formula.root = canonicalize(std::move(formula.root));
    for (auto& t : tokenize_formula(formula, config))
        q.math_terms.push_back({Field::math, std::move(t.term), t.weight});
}

std::string blank_spans(std::string_view input, const std::vector<ByteSpan>& spans) {
    std::string out(input);
    for (const auto& s : spans)
        for (std::size_t i = s.start; i < s.end; ++i) out[i] = ' ';
    return out;
}

}  // namespace

Query parse_query(std::string_view input, QueryFormat format, const PipelineConfig& config) {
    Query q;
    q.raw = std::string(input);
    std::vector<ByteSpan> math_spans;
    if (format == QueryFormat::latex) {
        std::size_t ordinal = 0;
        for (const auto& seg : latex_segments(input)) {
            math_spans.push_back(seg.span);
            std::string_view fragment = input.substr(seg.content.start, seg.content.size());
            if (blank_fragment(fragment)) continue;
            MathNode root;
            try {
                root = latex_to_mathml(fragment);
            } catch (const UnsupportedCommand& e) {
                throw UnsupportedCommand(e.command(), seg.content.start + e.position());
            } catch (const UnbalancedGroup& e) {
                throw UnbalancedGroup(seg.content.start + e.position());
            }
            append_math_terms(q, {std::move(root), FormulaKind::presentation, seg.span, ordinal++},
                              config);
        }
    } else {
        for (auto& f : extract_formulae(input, HostFormat::html)) {
            if (math_spans.empty() || math_spans.back() != f.doc_span) math_spans.push_back(f.doc_span);
            append_math_terms(q, std::move(f), config);
        }
    }
    for (auto& t : tokenize_text(blank_spans(input, math_spans)))
        q.text_terms.push_back({Field::text, std::move(t.term), 1.0});
    if (q.text_terms.empty() && q.math_terms.empty()) throw EmptyQuery();
    return q;
}

std::string_view to_string(HighlightKind kind) {
    return kind == HighlightKind::math ? "math" : "text";
}

namespace {

// Query weight per distinct term, in key order.
std::map<std::string, double> term_weights(const Query& query) {
    std::map<std::string, double> out;
    for (const auto* list : {&query.text_terms, &query.math_terms})
        for (const auto& t : *list) out[t.key()] += t.weight;
    return out;
}

}  // namespace

std::vector<std::pair<DocId, double>> rank(const IndexReader& index, const Query& query) {
    const std::size_t n = index.document_count();
    std::vector<double> acc(n, 0.0);
    std::vector<char> matched(n, 0);
    for (const auto& [key, qw] : term_weights(query)) {
        std::size_t df = index.document_frequency(key);
        if (df == 0) continue;
        double idf = 1.0 + std::log((static_cast<double>(n) + 1.0) / (static_cast<double>(df) + 1.0));
        double idf2 = idf * idf;
        index.for_each_posting(key, [&](DocId d, float wtf) {
            acc[d] += qw * std::sqrt(static_cast<double>(wtf)) * idf2;
            matched[d] = 1;
        });
    }
    std::vector<std::pair<DocId, double>> ranked;
    for (DocId d = 0; d < n; ++d) {
        if (!matched[d]) continue;
        double norm = std::sqrt(static_cast<double>(index.document_length(d)) + 1.0);
        ranked.emplace_back(d, acc[d] / norm);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return ranked;
}

SearchResponse execute(const IndexReader& index, const Query& query, std::size_t top_k,
                       std::size_t offset) {
    auto ranked = rank(index, query);
    SearchResponse response;
    response.total_hits = ranked.size();
    for (std::size_t i = offset; i < ranked.size() && i - offset < top_k; ++i) {
        auto [doc, score] = ranked[i];
        DocumentRecord rec = index.doc(doc);
        Highlighting h = highlight(index, doc, query);
        response.results.push_back({doc, score, std::move(rec.title), std::move(rec.path),
                                    std::move(h.snippet), std::move(h.snippet_highlights)});
    }
    return response;
}

namespace {

struct Hit {
    Highlight h;
    std::set<std::size_t> terms;
};

bool continuation(std::string_view s, std::size_t i) {
    return i < s.size() && (static_cast<unsigned char>(s[i]) & 0xC0) == 0x80;
}

bool is_space(char c) { return c == ' ' || c == '\n' || c == '\t' || c == '\r'; }

}  // namespace

Highlighting highlight(const IndexReader& index, DocId doc, const Query& query) {
    DocumentRecord rec = index.doc(doc);
    std::string_view body = rec.stored_body;

    std::map<std::pair<ByteSpan, HighlightKind>, std::set<std::size_t>> by_span;
    std::size_t term_id = 0;
    for (const auto& [key, qw] : term_weights(query)) {
        (void)qw;
        if (auto p = index.posting(key, doc)) {
            auto kind = key[0] == static_cast<char>(Field::math) ? HighlightKind::math
                                                                 : HighlightKind::text;
            for (const auto& span : p->occurrences) by_span[{span, kind}].insert(term_id);
        }
        ++term_id;
    }
    std::vector<Hit> hits;
    for (auto& [k, terms] : by_span) {
        if (k.first.end > body.size() || k.first.start > k.first.end) continue;
        hits.push_back({{k.first, k.second}, std::move(terms)});
    }

    Highlighting out;
    for (const auto& hit : hits) out.document_highlights.push_back(hit.h);

    std::size_t start = 0;
    std::size_t end = std::min(kSnippetBytes, body.size());
    if (!hits.empty()) {
        std::size_t best = 0;
        std::size_t best_count = 0;
        std::size_t best_end = 0;
        for (std::size_t i = 0; i < hits.size(); ++i) {
            std::size_t s = hits[i].h.span.start;
            std::size_t e = std::max(s + kSnippetBytes, hits[i].h.span.end);
            std::set<std::size_t> seen;
            for (std::size_t j = i; j < hits.size() && hits[j].h.span.start < e; ++j)
                if (hits[j].h.span.end <= e) seen.insert(hits[j].terms.begin(), hits[j].terms.end());
            if (seen.size() > best_count) {
                best = i;
                best_count = seen.size();
                best_end = e;
            }
        }
        const ByteSpan anchor = hits[best].h.span;
        if (anchor.size() > kSnippetBytes) {
            start = anchor.start;
            end = anchor.end;
        } else {
            std::size_t last_end = anchor.end;
            for (const auto& hit : hits)
                if (hit.h.span.start >= anchor.start && hit.h.span.end <= best_end)
                    last_end = std::max(last_end, hit.h.span.end);
            std::size_t slack = kSnippetBytes - std::min(kSnippetBytes, last_end - anchor.start);
            start = anchor.start - std::min(slack / 2, anchor.start);
            if (start > 0 && !is_space(body[start - 1])) {
                std::size_t at = start;
                while (at < anchor.start && !is_space(body[at])) ++at;
                if (at < anchor.start) start = at + 1;
            }
            while (start < anchor.start && continuation(body, start)) ++start;
            end = std::min(start + kSnippetBytes, body.size());
            if (end < body.size() && !is_space(body[end])) {
                std::size_t at = end;
                while (at > last_end && !is_space(body[at - 1])) --at;
                if (at > last_end) end = at;
            }
        }
    }
    while (end > start && continuation(body, end)) --end;

    out.snippet_start = start;
    out.snippet = std::string(body.substr(start, end - start));
    for (const auto& hit : hits) {
        const ByteSpan& s = hit.h.span;
        if (s.start >= start && s.end <= end)
            out.snippet_highlights.push_back({{s.start - start, s.end - start}, hit.h.kind});
    }
    return out;
}

}  // namespace mathfind
