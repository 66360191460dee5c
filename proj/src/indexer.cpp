#include "mathfind/indexer.hpp"

#include <algorithm>
#include <atomic>
#include <optional>
#include <thread>

#include "mathfind/document.hpp"
#include "mathfind/error.hpp"
#include "storage.hpp"

namespace fs = std::filesystem;

namespace mathfind {

namespace {

bool is_host_file(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".xhtml" || ext == ".html" || ext == ".htm" || ext == ".xml";
}

HostFormat format_of(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".html" || ext == ".htm" ? HostFormat::html : HostFormat::xhtml;
}

struct Prepared {
    std::optional<DocumentInput> doc;
    std::string error;
};

void prepare_batch(const fs::path& dataset, const std::vector<fs::path>& files, std::size_t begin,
                   std::size_t end, const IndexOptions& options, std::vector<Prepared>& out) {
    out.assign(end - begin, {});
    std::atomic<std::size_t> next{begin};
    auto work = [&] {
        for (std::size_t i = next++; i < end; i = next++) {
            Prepared& slot = out[i - begin];
            try {
                std::string body = storage::read_file(files[i]);
                std::string rel = fs::relative(files[i], dataset).generic_string();
                slot.doc = prepare_document(std::move(rel), std::move(body), options.config,
                                            format_of(files[i]));
            } catch (const std::exception& e) {
                slot.error = e.what();
            }
        }
    };
    std::size_t nthreads = std::clamp<std::size_t>(options.threads, 1, end - begin);
    if (nthreads == 1) {
        work();
        return;
    }
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(work);
}

}  // namespace

std::vector<fs::path> dataset_files(const fs::path& dataset) {
    std::error_code ec;
    if (!fs::is_directory(dataset, ec)) throw IoFailure("dataset directory not readable: " + dataset.string());
    std::vector<fs::path> out;
    fs::recursive_directory_iterator it(dataset, fs::directory_options::skip_permission_denied, ec);
    if (ec) throw IoFailure("cannot list " + dataset.string() + ": " + ec.message());
    for (const auto& entry : it)
        if (entry.is_regular_file(ec) && is_host_file(entry.path())) out.push_back(entry.path());
    std::sort(out.begin(), out.end());
    return out;
}

IndexReport index_directory(const fs::path& dataset, const fs::path& index_dir,
                            const IndexOptions& options) {
    options.config.validate();
    auto files = dataset_files(dataset);
    if (files.empty()) throw EmptyDataset(dataset.string());

    std::error_code ec;
    if (options.overwrite && fs::exists(index_dir, ec)) {
        fs::remove_all(index_dir, ec);
        if (ec) throw IoFailure("cannot clear " + index_dir.string() + ": " + ec.message());
    }
    IndexWriter writer = IndexWriter::create(index_dir, options.config);

    IndexReport report;
    report.files = files.size();
    const std::size_t batch = std::max<std::size_t>(options.batch_size, 1);
    const std::size_t commit_every = std::max<std::size_t>(options.commit_every, 1);
    std::vector<Prepared> prepared;
    for (std::size_t begin = 0; begin < files.size(); begin += batch) {
        std::size_t end = std::min(files.size(), begin + batch);
        prepare_batch(dataset, files, begin, end, options, prepared);
        for (std::size_t i = 0; i < prepared.size(); ++i) {
            if (!prepared[i].doc) {
                ++report.skipped;
                if (options.on_skip) options.on_skip(files[begin + i], prepared[i].error);
                continue;
            }
            writer.add_document(std::move(*prepared[i].doc));
            if (writer.pending_documents() >= commit_every) writer.commit();
        }
    }
    report.stats = writer.commit();
    report.segments = writer.segment_count();
    if (report.stats.documents == 0) throw EmptyDataset(dataset.string());
    return report;
}

}  // namespace mathfind
