#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mathfind {

/// One XML/MathML element. Leaves carry `text`; inner nodes carry `children`.
/// A node never has both.
struct MathNode {
    std::string name;
    std::vector<std::pair<std::string, std::string>> attributes;
    std::vector<MathNode> children;
    std::optional<std::string> text;

    MathNode() = default;
    explicit MathNode(std::string n) : name(std::move(n)) {}
    MathNode(std::string n, std::string t) : name(std::move(n)), text(std::move(t)) {}
    MathNode(std::string n, std::vector<MathNode> kids)
        : name(std::move(n)), children(std::move(kids)) {}

    bool is_leaf() const noexcept { return children.empty(); }
    const std::string* attribute(std::string_view key) const;
    void set_attribute(std::string key, std::string value);
    bool erase_attribute(std::string_view key);

    friend bool operator==(const MathNode&, const MathNode&) = default;
};

struct ByteSpan {
    std::size_t start = 0;
    std::size_t end = 0;

    std::size_t size() const noexcept { return end - start; }
    friend bool operator==(const ByteSpan&, const ByteSpan&) = default;
    friend auto operator<=>(const ByteSpan&, const ByteSpan&) = default;
};

enum class FormulaKind { presentation, content };

/// A formula occurrence inside a host document. `ordinal` numbers the
/// `<math>` islands of the document; both representations of an annotated
/// island share the island's ordinal and span.
struct Formula {
    MathNode root;
    FormulaKind kind = FormulaKind::presentation;
    ByteSpan doc_span;
    std::size_t ordinal = 0;
};

enum class HostFormat { xhtml, html };

/// Parses a single XML element (optionally preceded by a BOM, prolog,
/// comments or whitespace). Throws MalformedXml.
MathNode parse_mathml(std::string_view input);

/// Canonical text form: attributes sorted by name, no whitespace between
/// elements, raw UTF-8 with only the mandatory XML escapes.
std::string serialize(const MathNode& node);

/// True if the subtree uses Content MathML (apply, ci, cn, csymbol).
bool uses_content_markup(const MathNode& node);

/// Finds every `<math>` island in a host document. Host text is scanned, not
/// parsed; only the islands themselves must be well-formed.
std::vector<Formula> extract_formulae(std::string_view document, HostFormat format);

/// Spans of the `<math>` islands alone, without parsing them.
std::vector<ByteSpan> find_math_islands(std::string_view document);

/// Appends the UTF-8 encoding of `cp` to `out`.
void append_utf8(std::string& out, char32_t cp);

}  // namespace mathfind
