#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "mathfind/formula_pipeline.hpp"
#include "mathfind/index.hpp"

namespace mathfind {

struct IndexOptions {
    PipelineConfig config;
    std::size_t threads = 1;
    bool overwrite = false;
    /// Documents prepared in parallel before the writer consumes them.
    std::size_t batch_size = 256;
    /// A segment is committed every this many documents.
    std::size_t commit_every = 10000;
    /// Called for every file that could not be indexed.
    std::function<void(const std::filesystem::path&, const std::string&)> on_skip;
};

struct IndexReport {
    IndexStats stats;
    std::size_t files = 0;
    std::size_t skipped = 0;
    std::size_t segments = 0;
};

/// Host documents below `dataset` (.xhtml, .html, .htm, .xml), sorted.
std::vector<std::filesystem::path> dataset_files(const std::filesystem::path& dataset);

/// Indexes every document of a dataset directory into a new index. Files
/// with malformed math are skipped and reported through `on_skip`.
/// Throws EmptyDataset, IndexExists, IoFailure.
IndexReport index_directory(const std::filesystem::path& dataset,
                            const std::filesystem::path& index_dir, const IndexOptions& options);

}  // namespace mathfind
