#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "mathfind/mathml.hpp"

namespace mathfind {

/// Syntax tree of the supported LaTeX math subset.
///
/// Shapes: fraction has (numerator, denominator); sqrt has one child;
/// superscript/subscript have (base, script). A parenthesised expression is a
/// group of (operator open, group inner, operator close).
struct LatexNode {
    enum class Kind {
        symbol,
        number,
        group,
        fraction,
        sqrt,
        superscript,
        subscript,
        op,
        function,
        big_operator
    };

    Kind kind = Kind::group;
    std::vector<LatexNode> children;
    std::string literal;
    std::size_t position = 0;

    friend bool operator==(const LatexNode&, const LatexNode&) = default;
};

/// Parses a math-mode fragment (no surrounding `$`). Throws
/// UnsupportedCommand or UnbalancedGroup with the byte offset of the problem.
LatexNode parse_latex(std::string_view input);

/// Presentation MathML for a parsed fragment, already canonicalized.
MathNode latex_to_mathml(const LatexNode& ast);

/// parse_latex followed by latex_to_mathml.
MathNode latex_to_mathml(std::string_view input);

}  // namespace mathfind
