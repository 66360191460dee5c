#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mathfind/mathml.hpp"

namespace mathfind {

/// Placeholder prefix for unified variables (`§1`, `§2`, ...).
inline constexpr std::string_view kVariablePlaceholder = "§";
/// Placeholder every unified constant becomes.
inline constexpr std::string_view kConstantPlaceholder = "¤";

enum class TokenVariant { exact, var_unified, const_unified, both_unified };

std::string_view to_string(TokenVariant v);

/// Weighting and expansion knobs of the math pipeline.
///
/// A subformula at depth d emits an exact token of weight alpha^d; the
/// variable-unified variant is further multiplied by beta, the
/// constant-unified one by gamma, and the doubly unified one by both.
struct PipelineConfig {
    double alpha = 0.7;
    double beta = 0.8;
    double gamma = 0.8;
    std::optional<std::size_t> max_depth;
    bool index_leaves = true;

    /// Throws std::invalid_argument when a factor is outside (0,1) or
    /// max_depth is zero.
    void validate() const;

    friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

struct MathToken {
    std::string term;
    double weight = 0;
    TokenVariant variant = TokenVariant::exact;
    std::size_t depth = 0;
    std::size_t formula_ordinal = 0;
    ByteSpan doc_span;
};

/// Sorts the operands of flat commutative applications (`+`, times, `=` in
/// rows; plus/times/eq in content `apply`) by their serialization, bottom-up.
MathNode order_operands(MathNode root);

/// Every indexable subtree with its depth, in pre-order. The whole formula is
/// always first. Bare operators are never included.
std::vector<std::pair<const MathNode*, std::size_t>> extract_subformulae(
    const MathNode& root, const PipelineConfig& config);

/// Replaces each variable leaf (`mi`, `ci`) by `§k`, k numbering first
/// occurrences left to right.
MathNode unify_variables(MathNode root);
/// Replaces each constant leaf (`mn`, `cn`) by `¤`.
MathNode unify_constants(MathNode root);

/// unify_variables applied after re-ordering commutative operands so that the
/// result is the same for every renaming of the variables and every operand
/// permutation. Used for the unified index tokens.
MathNode unify_variables_canonical(const MathNode& root);

/// Full expansion of one canonical formula into weighted index tokens.
std::vector<MathToken> tokenize_formula(const Formula& formula, const PipelineConfig& config);

}  // namespace mathfind
