#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace mathfind {

/// Expression model of generated formulae.
struct Expr {
    enum class Kind { variable, number, binary, fraction, power, paren };
    Kind kind = Kind::variable;
    std::string literal;  // variable name, number, or operator glyph of a binary node
    std::vector<Expr> children;
};

/// Draws an expression of at most `max_depth` levels (a leaf has depth 1).
Expr random_expression(std::mt19937_64& rng, std::size_t max_depth);

/// `<math>` element in presentation MathML, operators explicit.
std::string to_presentation_mathml(const Expr& e);

/// Tokens the formula pipeline must emit for `e` under the default
/// configuration, counted on the expression model alone: every node gives
/// one exact token, one more per kind of leaf (variable, constant) below it,
/// and one for the doubly unified form when both kinds occur.
std::size_t expected_token_count(const Expr& e);

struct CorpusProfile {
    double mean_formulae = 3;
    double mean_words = 120;
    std::size_t max_depth = 4;
};

struct GeneratedDocument {
    std::string path;  // relative to the corpus directory
    std::vector<std::size_t> formula_tokens;
};

struct GeneratedFile {
    GeneratedDocument meta;
    std::string body;
};

struct CorpusManifest {
    std::uint64_t seed = 0;
    std::vector<GeneratedDocument> documents;

    std::size_t total_formulae() const;
    std::size_t total_tokens() const;
    std::string to_json() const;
};

/// Deterministic in-memory corpus: the same seed and profile give the same
/// bytes on every platform.
std::vector<GeneratedFile> generate_documents(std::uint64_t seed, std::size_t num_docs,
                                              const CorpusProfile& profile = {});

/// Writes the documents and `manifest.json` into `out_dir`, which must be
/// absent or empty. Throws NonEmptyDir, IoFailure.
CorpusManifest generate_corpus(std::uint64_t seed, std::size_t num_docs,
                               const std::filesystem::path& out_dir,
                               const CorpusProfile& profile = {});

}  // namespace mathfind
