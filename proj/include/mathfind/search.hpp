#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "mathfind/formula_pipeline.hpp"
#include "mathfind/index.hpp"

namespace mathfind {

enum class QueryFormat { latex, mathml };

struct QueryTerm {
    Field field = Field::text;
    std::string term;
    double weight = 1.0;

    std::string key() const { return field_term(field, term); }
};

/// An analyzed mixed query. Terms form a multiset: a term produced twice
/// counts twice.
struct Query {
    std::string raw;
    std::vector<QueryTerm> text_terms;
    std::vector<QueryTerm> math_terms;
};

/// Math segments are `$...$` in latex mode and inline `<math>...</math>` in
/// mathml mode; the rest is text. Errors carry the byte offset into `input`.
/// Throws EmptyQuery, UnsupportedCommand, UnbalancedGroup, MalformedXml.
Query parse_query(std::string_view input, QueryFormat format, const PipelineConfig& config);

enum class HighlightKind { text, math };
std::string_view to_string(HighlightKind kind);

struct Highlight {
    ByteSpan span;
    HighlightKind kind = HighlightKind::text;

    friend bool operator==(const Highlight&, const Highlight&) = default;
};

/// Maximum snippet length in bytes, unless one formula alone is longer.
inline constexpr std::size_t kSnippetBytes = 300;

struct Highlighting {
    /// Every matched occurrence, in document offsets, sorted.
    std::vector<Highlight> document_highlights;
    std::size_t snippet_start = 0;
    std::string snippet;
    /// Highlights lying wholly inside the snippet, re-based to it.
    std::vector<Highlight> snippet_highlights;
};

struct SearchResult {
    DocId doc_id = 0;
    double score = 0;
    std::string title;
    std::string path;
    std::string snippet;
    std::vector<Highlight> highlights;
};

struct SearchResponse {
    std::size_t total_hits = 0;
    std::vector<SearchResult> results;
};

/// (doc id, score) of every matching document, best first, ties by doc id.
std::vector<std::pair<DocId, double>> rank(const IndexReader& index, const Query& query);

/// One page of ranked, highlighted results.
SearchResponse execute(const IndexReader& index, const Query& query, std::size_t top_k,
                       std::size_t offset = 0);

/// Throws DocNotFound.
Highlighting highlight(const IndexReader& index, DocId doc, const Query& query);

}  // namespace mathfind
