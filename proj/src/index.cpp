#include "mathfind/index.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <ctime>
#include <set>
#include <unordered_map>

#include "json.hpp"
#include "mathfind/error.hpp"
#include "storage.hpp"

namespace fs = std::filesystem;

namespace mathfind {

std::string field_term(Field field, std::string_view term) {
    std::string out;
    out.reserve(term.size() + 1);
    out.push_back(static_cast<char>(field));
    out.append(term);
    return out;
}

namespace {

using storage::Cursor;
using storage::put_bytes;
using storage::put_fixed;
using storage::put_varint;

constexpr std::string_view kManifestMagic = "MFI1";
constexpr std::uint32_t kFormatVersion = 1;
constexpr std::string_view kDictMagic = "MFD1";
constexpr std::string_view kDocsMagic = "MFS1";
constexpr std::string_view kDocsFooterMagic = "MFSE";
constexpr const char* kManifestName = "MANIFEST";
constexpr const char* kManifestTmpName = "MANIFEST.tmp";
constexpr const char* kStatsName = "stats.json";
constexpr int kOpenRetries = 5;

enum FileKind { kPost = 0, kDict = 1, kDocs = 2 };
constexpr const char* kExtensions[3] = {".post", ".dict", ".docs"};

struct SegmentMeta {
    std::uint64_t id = 0;
    std::uint32_t doc_base = 0;
    std::uint32_t doc_count = 0;
    std::uint64_t term_count = 0;
    std::uint64_t sizes[3] = {0, 0, 0};
    std::uint32_t crcs[3] = {0, 0, 0};
};

struct Manifest {
    std::uint64_t generation = 0;
    PipelineConfig config;
    IndexStats stats;
    std::uint64_t next_segment_id = 1;
    std::vector<SegmentMeta> segments;
};

std::string segment_file(std::uint64_t id, FileKind kind) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "seg_%06llu", static_cast<unsigned long long>(id));
    return std::string(buf) + kExtensions[kind];
}

std::string encode_manifest(const Manifest& m) {
    std::string out(kManifestMagic);
    put_fixed<std::uint32_t>(out, kFormatVersion);
    put_fixed<std::uint64_t>(out, m.generation);
    put_fixed<double>(out, m.config.alpha);
    put_fixed<double>(out, m.config.beta);
    put_fixed<double>(out, m.config.gamma);
    put_fixed<std::uint8_t>(out, m.config.max_depth ? 1 : 0);
    put_fixed<std::uint64_t>(out, m.config.max_depth.value_or(0));
    put_fixed<std::uint8_t>(out, m.config.index_leaves ? 1 : 0);
    put_fixed<std::uint64_t>(out, m.stats.documents);
    put_fixed<std::uint64_t>(out, m.stats.input_formulae);
    put_fixed<std::uint64_t>(out, m.stats.indexed_subformulae);
    put_fixed<double>(out, m.stats.wall_time_seconds);
    put_fixed<double>(out, m.stats.cpu_time_seconds);
    put_fixed<std::uint64_t>(out, m.next_segment_id);
    put_fixed<std::uint32_t>(out, static_cast<std::uint32_t>(m.segments.size()));
    for (const auto& s : m.segments) {
        put_fixed<std::uint64_t>(out, s.id);
        put_fixed<std::uint32_t>(out, s.doc_base);
        put_fixed<std::uint32_t>(out, s.doc_count);
        put_fixed<std::uint64_t>(out, s.term_count);
        for (int k = 0; k < 3; ++k) {
            put_fixed<std::uint64_t>(out, s.sizes[k]);
            put_fixed<std::uint32_t>(out, s.crcs[k]);
        }
    }
    put_fixed<std::uint32_t>(out, storage::crc32(out));
    return out;
}

Manifest decode_manifest(std::string_view bytes) {
    if (bytes.size() < kManifestMagic.size() + 8 || bytes.substr(0, 4) != kManifestMagic)
        throw IndexCorrupt("bad manifest magic");
    std::string_view body = bytes.substr(0, bytes.size() - 4);
    std::uint32_t stored_crc;
    std::memcpy(&stored_crc, bytes.data() + body.size(), 4);
    if (storage::crc32(body) != stored_crc) throw IndexCorrupt("manifest checksum mismatch");

    Cursor c(body, "manifest");
    c.skip(4);
    if (c.fixed<std::uint32_t>() != kFormatVersion) throw IndexCorrupt("unsupported format version");
    Manifest m;
    m.generation = c.fixed<std::uint64_t>();
    m.config.alpha = c.fixed<double>();
    m.config.beta = c.fixed<double>();
    m.config.gamma = c.fixed<double>();
    bool has_depth = c.fixed<std::uint8_t>() != 0;
    auto depth = c.fixed<std::uint64_t>();
    if (has_depth) m.config.max_depth = static_cast<std::size_t>(depth);
    m.config.index_leaves = c.fixed<std::uint8_t>() != 0;
    m.stats.documents = c.fixed<std::uint64_t>();
    m.stats.input_formulae = c.fixed<std::uint64_t>();
    m.stats.indexed_subformulae = c.fixed<std::uint64_t>();
    m.stats.wall_time_seconds = c.fixed<double>();
    m.stats.cpu_time_seconds = c.fixed<double>();
    m.next_segment_id = c.fixed<std::uint64_t>();
    auto count = c.fixed<std::uint32_t>();
    std::uint64_t expected_base = 0;
    for (std::uint32_t i = 0; i < count; ++i) {
        SegmentMeta s;
        s.id = c.fixed<std::uint64_t>();
        s.doc_base = c.fixed<std::uint32_t>();
        s.doc_count = c.fixed<std::uint32_t>();
        s.term_count = c.fixed<std::uint64_t>();
        for (int k = 0; k < 3; ++k) {
            s.sizes[k] = c.fixed<std::uint64_t>();
            s.crcs[k] = c.fixed<std::uint32_t>();
        }
        if (s.doc_base != expected_base) throw IndexCorrupt("segments are not contiguous");
        expected_base += s.doc_count;
        m.segments.push_back(s);
    }
    if (!c.at_end()) throw IndexCorrupt("trailing bytes in manifest");
    if (expected_base != m.stats.documents) throw IndexCorrupt("document count mismatch");
    try {
        m.config.validate();
    } catch (const std::invalid_argument& e) {
        throw IndexCorrupt(std::string("bad pipeline config: ") + e.what());
    }
    return m;
}

void fsync_dir(const fs::path& dir) {
    int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
    if (fd < 0) return;
    ::fsync(fd);
    ::close(fd);
}

using Hook = std::function<void(std::string_view)>;

void fire(const Hook& hook, const std::string& point) {
    if (hook) hook(point);
}

void write_all(int fd, std::string_view data, const fs::path& path) {
    while (!data.empty()) {
        ssize_t n = ::write(fd, data.data(), data.size());
        if (n < 0) {
            if (errno == EINTR) continue;
            throw IoFailure("write " + path.string() + ": " + std::strerror(errno));
        }
        data.remove_prefix(static_cast<std::size_t>(n));
    }
}

// Writes and fsyncs a file. The hook sees "<point>.partial" with half the
// bytes on disk and "<point>.synced" once the file is durable.
void durable_write(const fs::path& path, std::string_view data, const Hook& hook,
                   const std::string& point) {
    int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) throw IoFailure("create " + path.string() + ": " + std::strerror(errno));
    struct Closer {
        int fd;
        ~Closer() { ::close(fd); }
    } closer{fd};
    std::size_t half = data.size() / 2;
    write_all(fd, data.substr(0, half), path);
    fire(hook, point + ".partial");
    write_all(fd, data.substr(half), path);
    if (::fsync(fd) != 0) throw IoFailure("fsync " + path.string() + ": " + std::strerror(errno));
    fire(hook, point + ".synced");
}

void write_stats_json(const fs::path& dir, const IndexStats& s) {
    nlohmann::json j = {
        {"documents", s.documents},
        {"input_formulae", s.input_formulae},
        {"indexed_subformulae", s.indexed_subformulae},
        {"wall_time_seconds", s.wall_time_seconds},
        {"cpu_time_seconds", s.cpu_time_seconds},
    };
    fs::path tmp = dir / (std::string(kStatsName) + ".tmp");
    durable_write(tmp, j.dump(2) + "\n", nullptr, "stats");
    fs::rename(tmp, dir / kStatsName);
}

void encode_occurrences(std::string& out, std::vector<ByteSpan>& occ) {
    std::sort(occ.begin(), occ.end());
    occ.erase(std::unique(occ.begin(), occ.end()), occ.end());
    std::string block;
    put_varint(block, occ.size());
    std::size_t prev = 0;
    for (const auto& s : occ) {
        put_varint(block, s.start - prev);
        put_varint(block, s.size());
        prev = s.start;
    }
    put_bytes(out, block);
}

std::vector<ByteSpan> decode_occurrences(std::string_view block) {
    Cursor c(block, "postings");
    auto n = c.varint();
    std::vector<ByteSpan> out;
    out.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(n, 1024)));
    std::size_t prev = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
        std::size_t start = prev + static_cast<std::size_t>(c.varint());
        std::size_t len = static_cast<std::size_t>(c.varint());
        out.push_back({start, start + len});
        prev = start;
    }
    return out;
}

// One posting list under construction (local doc ids).
struct PostingBuilder {
    std::string bytes;
    DocId last_doc = 0;
    std::uint32_t df = 0;

    void append(DocId local, float tf, std::vector<ByteSpan>& occ) {
        put_varint(bytes, df == 0 ? local : local - last_doc);
        put_fixed<float>(bytes, tf);
        encode_occurrences(bytes, occ);
        last_doc = local;
        ++df;
    }
};

struct DocEntry {
    std::uint64_t offset = 0;
    std::uint32_t length_text = 0;
    std::uint32_t length_math = 0;
};

// Doc store under construction.
struct DocsBuilder {
    std::string bytes{kDocsMagic};
    std::vector<DocEntry> table;

    void add_record(std::string_view record, std::uint32_t lt, std::uint32_t lm) {
        table.push_back({bytes.size(), lt, lm});
        bytes.append(record);
    }

    std::string finish() {
        for (const auto& e : table) {
            put_fixed<std::uint64_t>(bytes, e.offset);
            put_fixed<std::uint32_t>(bytes, e.length_text);
            put_fixed<std::uint32_t>(bytes, e.length_math);
        }
        put_fixed<std::uint32_t>(bytes, static_cast<std::uint32_t>(table.size()));
        bytes.append(kDocsFooterMagic);
        return std::move(bytes);
    }
};

std::string encode_doc_record(const DocumentInput& d) {
    std::string out;
    put_bytes(out, d.path);
    put_bytes(out, d.title);
    put_varint(out, d.formula_spans.size());
    std::size_t prev = 0;
    for (const auto& s : d.formula_spans) {
        put_varint(out, s.start - prev);
        put_varint(out, s.size());
        prev = s.start;
    }
    put_bytes(out, d.body);
    return out;
}

struct TermEntry {
    std::string term;
    std::uint64_t offset = 0;
    std::uint64_t length = 0;
    std::uint32_t df = 0;
};

std::string encode_dict(const std::vector<TermEntry>& entries) {
    std::string out(kDictMagic);
    put_varint(out, entries.size());
    std::string_view prev;
    for (const auto& e : entries) {
        std::size_t shared = 0;
        while (shared < prev.size() && shared < e.term.size() && prev[shared] == e.term[shared])
            ++shared;
        put_varint(out, shared);
        put_bytes(out, std::string_view(e.term).substr(shared));
        put_varint(out, e.df);
        put_varint(out, e.offset);
        put_varint(out, e.length);
        prev = e.term;
    }
    return out;
}

struct SegmentBytes {
    std::string files[3];
    std::uint64_t term_count = 0;
};

SegmentMeta describe(std::uint64_t id, std::uint32_t base, std::uint32_t count,
                     const SegmentBytes& bytes) {
    SegmentMeta meta;
    meta.id = id;
    meta.doc_base = base;
    meta.doc_count = count;
    meta.term_count = bytes.term_count;
    for (int k = 0; k < 3; ++k) {
        meta.sizes[k] = bytes.files[k].size();
        meta.crcs[k] = storage::crc32(bytes.files[k]);
    }
    return meta;
}

class SegmentReader {
public:
    SegmentReader(const fs::path& dir, const SegmentMeta& meta) : meta_(meta) {
        for (int k = 0; k < 3; ++k) {
            fs::path p = dir / segment_file(meta.id, static_cast<FileKind>(k));
            files_[k] = storage::MappedFile(p);
            auto view = files_[k].view();
            if (view.size() != meta.sizes[k])
                throw IndexCorrupt(p.filename().string() + ": size mismatch");
            if (storage::crc32(view) != meta.crcs[k])
                throw IndexCorrupt(p.filename().string() + ": checksum mismatch");
        }
        load_dict();
        load_docs();
    }

    const SegmentMeta& meta() const { return meta_; }
    const std::vector<TermEntry>& entries() const { return dict_; }

    const TermEntry* find(std::string_view term) const {
        auto it = std::lower_bound(dict_.begin(), dict_.end(), term,
                                   [](const TermEntry& e, std::string_view t) { return e.term < t; });
        if (it == dict_.end() || it->term != term) return nullptr;
        return &*it;
    }

    std::string_view list_bytes(const TermEntry& e) const {
        return files_[kPost].view().substr(static_cast<std::size_t>(e.offset),
                                           static_cast<std::size_t>(e.length));
    }

    template <typename Fn>
    void scan(const TermEntry& e, bool with_occurrences, Fn&& fn) const {
        Cursor c(list_bytes(e), "postings");
        DocId local = 0;
        for (std::uint32_t i = 0; i < e.df; ++i) {
            auto delta = static_cast<DocId>(c.varint());
            local = i == 0 ? delta : local + delta;
            if (local >= meta_.doc_count) c.corrupt("doc id out of range");
            float tf = c.fixed<float>();
            std::string_view occ = c.prefixed_bytes();
            if (with_occurrences)
                fn(meta_.doc_base + local, tf, decode_occurrences(occ));
            else
                fn(meta_.doc_base + local, tf, std::vector<ByteSpan>{});
        }
    }

    const DocEntry& doc_entry(DocId local) const { return docs_[local]; }

    DocumentRecord record(DocId local) const {
        auto view = files_[kDocs].view();
        std::size_t start = static_cast<std::size_t>(docs_[local].offset);
        std::size_t end = local + 1 < docs_.size() ? static_cast<std::size_t>(docs_[local + 1].offset)
                                                   : table_offset_;
        Cursor c(view.substr(start, end - start), "doc store");
        DocumentRecord r;
        r.doc_id = meta_.doc_base + local;
        r.path = std::string(c.prefixed_bytes());
        r.title = std::string(c.prefixed_bytes());
        auto nform = c.varint();
        std::size_t prev = 0;
        for (std::uint64_t i = 0; i < nform; ++i) {
            std::size_t s = prev + static_cast<std::size_t>(c.varint());
            std::size_t len = static_cast<std::size_t>(c.varint());
            r.formulae.push_back({s, s + len});
            prev = s;
        }
        r.stored_body = std::string(c.prefixed_bytes());
        r.length_text = docs_[local].length_text;
        r.length_math = docs_[local].length_math;
        return r;
    }

    std::string_view raw_record(DocId local) const {
        std::size_t start = static_cast<std::size_t>(docs_[local].offset);
        std::size_t end = local + 1 < docs_.size() ? static_cast<std::size_t>(docs_[local + 1].offset)
                                                   : table_offset_;
        return files_[kDocs].view().substr(start, end - start);
    }

private:
    void load_dict() {
        auto view = files_[kDict].view();
        Cursor c(view, "dictionary");
        if (c.bytes(4) != kDictMagic) c.corrupt("bad magic");
        auto n = c.varint();
        if (n != meta_.term_count) c.corrupt("term count mismatch");
        dict_.reserve(static_cast<std::size_t>(n));
        std::string prev;
        for (std::uint64_t i = 0; i < n; ++i) {
            auto shared = static_cast<std::size_t>(c.varint());
            if (shared > prev.size()) c.corrupt("bad shared prefix");
            TermEntry e;
            e.term = prev.substr(0, shared);
            e.term.append(c.prefixed_bytes());
            e.df = static_cast<std::uint32_t>(c.varint());
            e.offset = c.varint();
            e.length = c.varint();
            if (e.offset + e.length > files_[kPost].view().size()) c.corrupt("postings out of range");
            if (!dict_.empty() && !(dict_.back().term < e.term)) c.corrupt("terms out of order");
            prev = e.term;
            dict_.push_back(std::move(e));
        }
    }

    void load_docs() {
        auto view = files_[kDocs].view();
        if (view.size() < 12 || view.substr(0, 4) != kDocsMagic ||
            view.substr(view.size() - 4) != kDocsFooterMagic)
            throw IndexCorrupt("doc store: bad magic");
        std::uint32_t count;
        std::memcpy(&count, view.data() + view.size() - 8, 4);
        if (count != meta_.doc_count) throw IndexCorrupt("doc store: count mismatch");
        std::size_t table_bytes = static_cast<std::size_t>(count) * 16;
        if (view.size() < 12 + table_bytes) throw IndexCorrupt("doc store: truncated table");
        table_offset_ = view.size() - 8 - table_bytes;
        Cursor c(view.substr(table_offset_, table_bytes), "doc store");
        docs_.resize(count);
        for (auto& d : docs_) {
            d.offset = c.fixed<std::uint64_t>();
            d.length_text = c.fixed<std::uint32_t>();
            d.length_math = c.fixed<std::uint32_t>();
            if (d.offset < 4 || d.offset > table_offset_) throw IndexCorrupt("doc store: bad offset");
        }
    }

    SegmentMeta meta_;
    storage::MappedFile files_[3];
    std::vector<TermEntry> dict_;
    std::vector<DocEntry> docs_;
    std::size_t table_offset_ = 0;
};

Manifest read_manifest(const fs::path& dir) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw IoFailure("no index directory at " + dir.string());
    if (!fs::exists(dir / kManifestName, ec)) throw IndexCorrupt("missing manifest in " + dir.string());
    return decode_manifest(storage::read_file(dir / kManifestName));
}

// Opens every segment of the current manifest; retries when a concurrent
// merge removed files between reading the manifest and opening them.
std::pair<Manifest, std::vector<std::unique_ptr<SegmentReader>>> open_snapshot(
    const fs::path& dir) {
    for (int attempt = 0;; ++attempt) {
        Manifest m = read_manifest(dir);
        std::vector<std::unique_ptr<SegmentReader>> segs;
        try {
            for (const auto& meta : m.segments)
                segs.push_back(std::make_unique<SegmentReader>(dir, meta));
            return {std::move(m), std::move(segs)};
        } catch (const IoFailure&) {
            if (attempt + 1 >= kOpenRetries) throw;
        }
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// IndexWriter

struct IndexWriter::Impl {
    fs::path dir;
    Manifest manifest;
    Hook hook;

    std::unordered_map<std::string, PostingBuilder> terms;
    DocsBuilder docs;
    IndexStats pending;  // counters of buffered documents only

    std::chrono::steady_clock::time_point wall_start = std::chrono::steady_clock::now();
    std::clock_t cpu_start = std::clock();

    void reset_clock() {
        wall_start = std::chrono::steady_clock::now();
        cpu_start = std::clock();
    }

    void publish(const Manifest& next, const std::string& point) {
        durable_write(dir / kManifestTmpName, encode_manifest(next), hook, point + ".tmp");
        fs::rename(dir / kManifestTmpName, dir / kManifestName);
        fire(hook, point + ".renamed");
        fsync_dir(dir);
    }

    void write_segment(std::uint64_t id, const SegmentBytes& bytes, const std::string& point) {
        static constexpr const char* names[3] = {"post", "dict", "docs"};
        for (int k = 0; k < 3; ++k)
            durable_write(dir / segment_file(id, static_cast<FileKind>(k)), bytes.files[k], hook,
                          point + "." + names[k]);
        fsync_dir(dir);
    }

    SegmentBytes build_pending_segment() {
        std::vector<std::pair<const std::string*, PostingBuilder*>> sorted;
        sorted.reserve(terms.size());
        for (auto& [t, b] : terms) sorted.emplace_back(&t, &b);
        std::sort(sorted.begin(), sorted.end(),
                  [](const auto& a, const auto& b) { return *a.first < *b.first; });
        SegmentBytes out;
        std::vector<TermEntry> entries;
        entries.reserve(sorted.size());
        std::string& post = out.files[kPost];
        for (auto& [term, builder] : sorted) {
            entries.push_back({*term, post.size(), builder->bytes.size(), builder->df});
            post.append(builder->bytes);
        }
        out.files[kDict] = encode_dict(entries);
        out.files[kDocs] = docs.finish();
        out.term_count = entries.size();
        return out;
    }

    void merge_all() {
        std::vector<std::unique_ptr<SegmentReader>> segs;
        for (const auto& meta : manifest.segments)
            segs.push_back(std::make_unique<SegmentReader>(dir, meta));

        const DocId base = manifest.segments.front().doc_base;
        std::set<std::string_view> all_terms;
        for (const auto& s : segs)
            for (const auto& e : s->entries()) all_terms.insert(e.term);

        SegmentBytes out;
        std::vector<TermEntry> entries;
        entries.reserve(all_terms.size());
        std::string& post = out.files[kPost];
        for (std::string_view term : all_terms) {
            PostingBuilder builder;
            for (const auto& s : segs) {
                const TermEntry* e = s->find(term);
                if (!e) continue;
                s->scan(*e, true, [&](DocId doc, float tf, std::vector<ByteSpan> occ) {
                    builder.append(doc - base, tf, occ);
                });
            }
            entries.push_back({std::string(term), post.size(), builder.bytes.size(), builder.df});
            post.append(builder.bytes);
        }
        out.files[kDict] = encode_dict(entries);
        out.term_count = entries.size();

        DocsBuilder merged_docs;
        std::uint32_t total = 0;
        for (const auto& s : segs) {
            for (DocId local = 0; local < s->meta().doc_count; ++local) {
                const DocEntry& e = s->doc_entry(local);
                merged_docs.add_record(s->raw_record(local), e.length_text, e.length_math);
            }
            total += s->meta().doc_count;
        }
        out.files[kDocs] = merged_docs.finish();

        Manifest next = manifest;
        std::uint64_t id = next.next_segment_id++;
        next.generation++;
        next.segments = {describe(id, base, total, out)};
        write_segment(id, out, "merge.segment");
        segs.clear();
        publish(next, "merge.manifest");
        std::vector<SegmentMeta> old = std::move(manifest.segments);
        manifest = std::move(next);
        for (const auto& meta : old) {
            for (int k = 0; k < 3; ++k) {
                std::error_code ec;
                fs::remove(dir / segment_file(meta.id, static_cast<FileKind>(k)), ec);
            }
            fire(hook, "merge.removed");
        }
    }

    // Removes files no manifest refers to (debris of interrupted commits).
    void remove_orphans() {
        std::set<std::string> live;
        for (const auto& meta : manifest.segments)
            for (int k = 0; k < 3; ++k) live.insert(segment_file(meta.id, static_cast<FileKind>(k)));
        for (const auto& entry : fs::directory_iterator(dir)) {
            std::string name = entry.path().filename().string();
            bool segment = name.starts_with("seg_");
            bool tmp = name == kManifestTmpName || name.ends_with(".tmp");
            if ((segment && !live.contains(name)) || tmp) {
                std::error_code ec;
                fs::remove(entry.path(), ec);
            }
        }
    }
};

IndexWriter::IndexWriter(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
IndexWriter::IndexWriter(IndexWriter&&) noexcept = default;
IndexWriter& IndexWriter::operator=(IndexWriter&&) noexcept = default;
IndexWriter::~IndexWriter() = default;

IndexWriter IndexWriter::create(const fs::path& dir, const PipelineConfig& config) {
    config.validate();
    std::error_code ec;
    if (fs::exists(dir, ec)) {
        if (!fs::is_directory(dir, ec) || !fs::is_empty(dir, ec)) throw IndexExists(dir.string());
    } else if (!fs::create_directories(dir, ec) || ec) {
        throw IoFailure("cannot create " + dir.string() + ": " + ec.message());
    }
    auto impl = std::make_unique<Impl>();
    impl->dir = dir;
    impl->manifest.config = config;
    impl->publish(impl->manifest, "create.manifest");
    write_stats_json(dir, impl->manifest.stats);
    return IndexWriter(std::move(impl));
}

IndexWriter IndexWriter::open(const fs::path& dir) {
    auto impl = std::make_unique<Impl>();
    impl->dir = dir;
    impl->manifest = read_manifest(dir);
    impl->remove_orphans();
    // Validate the live segments before appending to them.
    for (const auto& meta : impl->manifest.segments) SegmentReader check(dir, meta);
    // finish a merge that a crash cut short
    if (impl->manifest.segments.size() > kMaxSegments) impl->merge_all();
    return IndexWriter(std::move(impl));
}

DocId IndexWriter::add_document(DocumentInput doc) {
    auto& im = *impl_;
    const DocId local = static_cast<DocId>(im.docs.table.size());
    const DocId global = static_cast<DocId>(im.manifest.stats.documents) + local;

    struct Agg {
        double tf = 0;
        std::vector<ByteSpan> occ;
    };
    std::unordered_map<std::string, Agg> agg;
    for (const auto& t : doc.text_tokens) {
        auto& a = agg[field_term(Field::text, t.term)];
        a.tf += 1;
        a.occ.push_back(t.raw_span);
    }
    std::set<std::size_t> ordinals;
    for (const auto& t : doc.math_tokens) {
        auto& a = agg[field_term(Field::math, t.term)];
        a.tf += t.weight;
        if (a.occ.empty() || a.occ.back() != t.doc_span) a.occ.push_back(t.doc_span);
        ordinals.insert(t.formula_ordinal);
    }
    for (auto& [term, a] : agg) im.terms[term].append(local, static_cast<float>(a.tf), a.occ);

    im.docs.add_record(encode_doc_record(doc), static_cast<std::uint32_t>(doc.text_tokens.size()),
                       static_cast<std::uint32_t>(doc.math_tokens.size()));
    im.pending.documents += 1;
    im.pending.input_formulae += ordinals.size();
    im.pending.indexed_subformulae += doc.math_tokens.size();
    return global;
}

IndexStats IndexWriter::commit() {
    auto& im = *impl_;
    if (im.docs.table.empty()) return im.manifest.stats;

    Manifest next = im.manifest;
    std::uint64_t id = next.next_segment_id++;
    next.generation++;
    auto count = static_cast<std::uint32_t>(im.docs.table.size());
    SegmentBytes bytes = im.build_pending_segment();
    next.segments.push_back(
        describe(id, static_cast<std::uint32_t>(im.manifest.stats.documents), count, bytes));

    auto wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - im.wall_start);
    auto cpu = static_cast<double>(std::clock() - im.cpu_start) / CLOCKS_PER_SEC;
    next.stats.documents += im.pending.documents;
    next.stats.input_formulae += im.pending.input_formulae;
    next.stats.indexed_subformulae += im.pending.indexed_subformulae;
    next.stats.wall_time_seconds += wall.count();
    next.stats.cpu_time_seconds += cpu;

    im.write_segment(id, bytes, "commit.segment");
    im.publish(next, "commit.manifest");
    im.manifest = std::move(next);
    im.terms.clear();
    im.docs = DocsBuilder{};
    im.pending = IndexStats{};

    if (im.manifest.segments.size() > kMaxSegments) im.merge_all();
    write_stats_json(im.dir, im.manifest.stats);
    fire(im.hook, "commit.done");
    im.reset_clock();
    return im.manifest.stats;
}

IndexStats IndexWriter::stats() const {
    IndexStats s = impl_->manifest.stats;
    s.documents += impl_->pending.documents;
    s.input_formulae += impl_->pending.input_formulae;
    s.indexed_subformulae += impl_->pending.indexed_subformulae;
    return s;
}

const PipelineConfig& IndexWriter::config() const { return impl_->manifest.config; }
std::size_t IndexWriter::segment_count() const { return impl_->manifest.segments.size(); }
std::size_t IndexWriter::pending_documents() const { return impl_->docs.table.size(); }
void IndexWriter::set_fault_hook(std::function<void(std::string_view)> hook) {
    impl_->hook = std::move(hook);
}

// ---------------------------------------------------------------------------
// IndexReader

struct IndexReader::Impl {
    Manifest manifest;
    std::vector<std::unique_ptr<SegmentReader>> segments;

    std::pair<const SegmentReader*, DocId> locate(DocId id) const {
        if (id >= manifest.stats.documents) throw DocNotFound(id);
        auto it = std::upper_bound(segments.begin(), segments.end(), id,
                                   [](DocId d, const auto& s) { return d < s->meta().doc_base; });
        const auto* seg = (it - 1)->get();
        return {seg, id - seg->meta().doc_base};
    }
};

IndexReader::IndexReader(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
IndexReader::IndexReader(IndexReader&&) noexcept = default;
IndexReader& IndexReader::operator=(IndexReader&&) noexcept = default;
IndexReader::~IndexReader() = default;

IndexReader IndexReader::open(const fs::path& dir) {
    auto impl = std::make_unique<Impl>();
    auto [manifest, segments] = open_snapshot(dir);
    impl->manifest = std::move(manifest);
    impl->segments = std::move(segments);
    return IndexReader(std::move(impl));
}

std::vector<Posting> IndexReader::lookup(std::string_view prefixed_term) const {
    std::vector<Posting> out;
    for (const auto& seg : impl_->segments) {
        const TermEntry* e = seg->find(prefixed_term);
        if (!e) continue;
        seg->scan(*e, true, [&](DocId doc, float tf, std::vector<ByteSpan> occ) {
            out.push_back({doc, tf, std::move(occ)});
        });
    }
    return out;
}

std::vector<Posting> IndexReader::lookup(Field field, std::string_view term) const {
    return lookup(field_term(field, term));
}

std::size_t IndexReader::document_frequency(std::string_view prefixed_term) const {
    std::size_t df = 0;
    for (const auto& seg : impl_->segments)
        if (const TermEntry* e = seg->find(prefixed_term)) df += e->df;
    return df;
}

void IndexReader::for_each_posting(std::string_view prefixed_term,
                                   const std::function<void(DocId, float)>& fn) const {
    for (const auto& seg : impl_->segments) {
        const TermEntry* e = seg->find(prefixed_term);
        if (!e) continue;
        seg->scan(*e, false, [&](DocId doc, float tf, const std::vector<ByteSpan>&) { fn(doc, tf); });
    }
}

std::optional<Posting> IndexReader::posting(std::string_view prefixed_term, DocId doc) const {
    if (doc >= document_count()) return std::nullopt;
    const SegmentReader* seg = impl_->locate(doc).first;
    const TermEntry* e = seg->find(prefixed_term);
    if (!e) return std::nullopt;
    Cursor c(seg->list_bytes(*e), "postings");
    DocId cur = 0;
    for (std::uint32_t i = 0; i < e->df; ++i) {
        auto delta = static_cast<DocId>(c.varint());
        cur = i == 0 ? delta : cur + delta;
        float tf = c.fixed<float>();
        std::string_view occ = c.prefixed_bytes();
        if (seg->meta().doc_base + cur == doc) return Posting{doc, tf, decode_occurrences(occ)};
    }
    return std::nullopt;
}

DocumentRecord IndexReader::doc(DocId id) const {
    auto [seg, local] = impl_->locate(id);
    return seg->record(local);
}

std::uint64_t IndexReader::document_length(DocId id) const {
    auto [seg, local] = impl_->locate(id);
    const DocEntry& e = seg->doc_entry(local);
    return static_cast<std::uint64_t>(e.length_text) + e.length_math;
}

std::size_t IndexReader::document_count() const {
    return static_cast<std::size_t>(impl_->manifest.stats.documents);
}

const IndexStats& IndexReader::stats() const { return impl_->manifest.stats; }
const PipelineConfig& IndexReader::config() const { return impl_->manifest.config; }
std::size_t IndexReader::segment_count() const { return impl_->segments.size(); }
std::uint64_t IndexReader::generation() const { return impl_->manifest.generation; }

std::vector<std::string> IndexReader::terms() const {
    std::set<std::string> all;
    for (const auto& seg : impl_->segments)
        for (const auto& e : seg->entries()) all.insert(e.term);
    return {all.begin(), all.end()};
}

}  // namespace mathfind
