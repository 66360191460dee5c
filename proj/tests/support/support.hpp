// Test-only helpers: random trees, independent oracles, scratch directories.
#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "mathfind/formula_pipeline.hpp"
#include "mathfind/index.hpp"
#include "mathfind/mathml.hpp"
#include "mathfind/search.hpp"

namespace mathfind {

/// gtest printer; shows attribute order and empty text, unlike serialize.
void PrintTo(const MathNode& node, std::ostream* os);

}  // namespace mathfind

namespace mathfind::testkit {

class TempDir {
public:
    explicit TempDir(const std::string& tag = "t");
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

void write_file(const std::filesystem::path& p, const std::string& data);
std::string read_file(const std::filesystem::path& p);

/// Random presentation tree that may use non-canonical encodings (mfenced,
/// msubsup, redundant rows, ASCII operators, presentational attributes).
MathNode random_raw_tree(std::mt19937_64& rng, std::size_t max_depth);

/// Random tree that already is in canonical form, with flat commutative rows.
MathNode random_canonical_tree(std::mt19937_64& rng, std::size_t max_depth);

/// Shuffles the operands of every flat row built from one commutative operator.
MathNode permute_commutative(const MathNode& root, std::mt19937_64& rng);

/// Applies an injective renaming to every `mi` leaf.
MathNode rename_identifiers(const MathNode& root, const std::map<std::string, std::string>& names);

std::vector<std::string> identifier_names(const MathNode& root);

/// Subtrees a tokenizer should visit, counted by plain recursion.
std::size_t brute_force_subformula_count(const MathNode& root, bool leaves,
                                         std::optional<std::size_t> max_depth);

/// Tokens expected from a canonical tree under the variant-suppression rule.
std::size_t brute_force_token_count(const MathNode& root);

/// Sorted (term, variant, weight) triples of a token list.
std::vector<std::string> token_multiset(const std::vector<MathToken>& tokens, bool unified_only);

/// Document built from text and MathML strings; the title is fixed.
std::string make_document(const std::string& title, const std::vector<std::string>& parts);

/// Exhaustive scorer: recomputes every statistic from the raw document inputs
/// and scores every document with the tf-idf formula.
std::vector<std::pair<DocId, double>> reference_ranking(const std::vector<DocumentInput>& docs,
                                                        const Query& query);

/// Prepared inputs of generated documents (small profile, deterministic).
std::vector<DocumentInput> sample_inputs(std::uint64_t seed, std::size_t count,
                                         const PipelineConfig& config = {});

/// Fault points a writer passes through while committing `docs` in batches of
/// `per_commit`, in order.
std::vector<std::string> commit_fault_points(const std::filesystem::path& dir,
                                             const std::vector<DocumentInput>& docs,
                                             std::size_t per_commit);

/// Commits `docs` in batches, aborting at the `crash_at`-th fault point, then
/// checks that the index reopens with exactly the documents whose commit was
/// published and that appending the rest works. Empty string on success,
/// otherwise what went wrong.
std::string crash_trial(const std::filesystem::path& dir, const std::vector<DocumentInput>& docs,
                        std::size_t per_commit, std::size_t crash_at);

/// Path of the mathfind executable under test.
std::filesystem::path mathfind_binary();

struct ProcessResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

/// Runs the CLI with arguments, optional stdin and extra environment.
ProcessResult run_cli(const std::vector<std::string>& args, const std::string& stdin_data = "",
                      const std::vector<std::string>& env = {});

/// The CLI running in the background, output captured to files.
class BackgroundProcess {
public:
    BackgroundProcess(const std::vector<std::string>& args, const std::vector<std::string>& env = {});
    ~BackgroundProcess();
    BackgroundProcess(const BackgroundProcess&) = delete;
    BackgroundProcess& operator=(const BackgroundProcess&) = delete;

    /// Waits until stdout contains `needle`; false on timeout or exit.
    bool wait_for_output(const std::string& needle, double timeout_seconds = 20);
    /// Port from the "listening on http://host:port" line, or -1.
    int listening_port(double timeout_seconds = 20);
    void signal(int sig);
    /// Exit code, 128+signal when killed, nullopt on timeout.
    std::optional<int> wait(double timeout_seconds = 20);
    std::string out() const;
    std::string err() const;

private:
    TempDir logs_;
    int pid_ = -1;
    std::optional<int> status_;
};

}  // namespace mathfind::testkit
