#pragma once

#include <span>
#include <string>
#include <string_view>

#include "mathfind/mathml.hpp"

namespace mathfind {

/// Glyph every multiplication spelling (`*`, `×`, `⋅`, `·`, InvisibleTimes) is
/// rewritten to.
inline constexpr std::string_view kCanonicalTimes = "×";
/// Glyph every minus spelling (hyphen-minus, U+2212) is rewritten to.
inline constexpr std::string_view kCanonicalMinus = "−";

struct CanonicalizationRule {
    std::string_view id;
    std::string_view description;
    /// Rewrites one node whose children are already canonical. Returns true
    /// if the node changed.
    bool (*apply)(MathNode& node, bool presentation);
    /// Rules that only make sense for Presentation MathML.
    bool presentation_only;
};

/// The rule set, in application order. New rules append at the end.
std::span<const CanonicalizationRule> canonicalization_rules();

/// Maps an operator glyph through the times/minus normalization; other
/// glyphs are returned unchanged.
std::string normalize_operator_glyph(std::string_view glyph);

/// Rewrites a presentation or content tree to its canonical form. Rules are
/// applied bottom-up and the pass repeats until nothing changes.
MathNode canonicalize(MathNode root);

}  // namespace mathfind
