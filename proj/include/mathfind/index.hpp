#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mathfind/formula_pipeline.hpp"
#include "mathfind/mathml.hpp"
#include "mathfind/text.hpp"

namespace mathfind {

using DocId = std::uint32_t;

/// Terms of both fields share one dictionary; a one-byte prefix keeps them
/// apart.
enum class Field : char { text = 't', math = 'm' };

std::string field_term(Field field, std::string_view term);

struct Posting {
    DocId doc_id = 0;
    /// Sum of token weights for math terms, occurrence count for text terms.
    float weighted_tf = 0;
    std::vector<ByteSpan> occurrences;

    friend bool operator==(const Posting&, const Posting&) = default;
};

struct IndexStats {
    std::uint64_t documents = 0;
    std::uint64_t input_formulae = 0;
    std::uint64_t indexed_subformulae = 0;
    double wall_time_seconds = 0;
    double cpu_time_seconds = 0;

    friend bool operator==(const IndexStats&, const IndexStats&) = default;
};

struct DocumentRecord {
    DocId doc_id = 0;
    std::string path;
    std::string title;
    std::uint32_t length_text = 0;
    std::uint32_t length_math = 0;
    std::string stored_body;
    std::vector<ByteSpan> formulae;
};

/// Everything the writer needs for one document.
struct DocumentInput {
    std::string path;
    std::string title;
    std::string body;
    std::vector<ByteSpan> formula_spans;
    std::vector<TextToken> text_tokens;
    std::vector<MathToken> math_tokens;
};

/// Segments are merged into one once a commit leaves more than this many.
inline constexpr std::size_t kMaxSegments = 8;

/// Single writer over an index directory. Documents are buffered in memory
/// and become visible to readers at commit().
class IndexWriter {
public:
    /// Throws IndexExists if `dir` exists and is not empty.
    static IndexWriter create(const std::filesystem::path& dir, const PipelineConfig& config = {});
    /// Opens an existing index for appending and removes files left over by an
    /// interrupted commit. Throws IndexCorrupt.
    static IndexWriter open(const std::filesystem::path& dir);

    IndexWriter(IndexWriter&&) noexcept;
    IndexWriter& operator=(IndexWriter&&) noexcept;
    ~IndexWriter();

    DocId add_document(DocumentInput doc);
    IndexStats commit();

    /// Committed stats plus the counters of pending documents.
    IndexStats stats() const;
    const PipelineConfig& config() const;
    std::size_t segment_count() const;
    std::size_t pending_documents() const;

    /// Called with a point name at every durable step of commit(). Test hook
    /// for crash simulation: throwing from it abandons the commit mid-way.
    void set_fault_hook(std::function<void(std::string_view)> hook);

private:
    struct Impl;
    explicit IndexWriter(std::unique_ptr<Impl> impl);
    std::unique_ptr<Impl> impl_;
};

/// Read-only snapshot of the last committed state of an index.
class IndexReader {
public:
    /// Throws IndexCorrupt (bad magic, version or checksum) or IoFailure.
    static IndexReader open(const std::filesystem::path& dir);

    IndexReader(IndexReader&&) noexcept;
    IndexReader& operator=(IndexReader&&) noexcept;
    ~IndexReader();

    /// Postings of a field-prefixed term, sorted by doc id. Empty if absent.
    std::vector<Posting> lookup(std::string_view prefixed_term) const;
    std::vector<Posting> lookup(Field field, std::string_view term) const;

    /// Number of documents containing the term.
    std::size_t document_frequency(std::string_view prefixed_term) const;

    /// Streams (doc id, weighted tf) without decoding occurrence spans.
    void for_each_posting(std::string_view prefixed_term,
                          const std::function<void(DocId, float)>& fn) const;

    /// Posting of one document for a term, if any.
    std::optional<Posting> posting(std::string_view prefixed_term, DocId doc) const;

    /// Throws DocNotFound for ids outside [0, document_count()).
    DocumentRecord doc(DocId id) const;
    /// length_text + length_math of a document.
    std::uint64_t document_length(DocId id) const;
    std::size_t document_count() const;

    const IndexStats& stats() const;
    const PipelineConfig& config() const;
    std::size_t segment_count() const;
    std::uint64_t generation() const;

    /// Every term in the index, in dictionary order (diagnostics and tests).
    std::vector<std::string> terms() const;

private:
    struct Impl;
    explicit IndexReader(std::unique_ptr<Impl> impl);
    std::unique_ptr<Impl> impl_;
};

}  // namespace mathfind
