#include "mathfind/canonicalize.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

namespace mathfind {

namespace {

constexpr int kMaxPasses = 4;

// Attributes that only affect rendering.
bool is_presentational_attribute(std::string_view name, std::string_view element) {
    static constexpr std::array<std::string_view, 31> kDropped = {
        "style", "class", "id", "xref", "href", "alttext", "display", "mathcolor",
        "mathbackground", "mathsize", "fontsize", "fontweight", "fontstyle", "fontfamily",
        "color", "background", "stretchy", "lspace", "rspace", "form", "fence", "separator",
        "largeop", "movablelimits", "symmetric", "maxsize", "minsize", "accent", "accentunder",
        "scriptlevel", "displaystyle"};
    if (name == "mathvariant") return element != "mi";
    if (name == "xmlns" || name.starts_with("xmlns:")) return true;
    return std::find(kDropped.begin(), kDropped.end(), name) != kDropped.end();
}

// Elements whose content is an inferred row: they keep exactly one child.
bool has_inferred_row(std::string_view name) {
    return name == "msqrt" || name == "mstyle" || name == "mpadded" || name == "mphantom" ||
           name == "menclose" || name == "mtd" || name == "merror";
}

bool is_row(const MathNode& n) { return n.name == "mrow" || n.name == "math"; }

bool is_mo(const MathNode& n) { return n.name == "mo"; }

// C1: strip presentational attributes, unwrap style-only wrappers, drop spacing.
bool strip_presentation(MathNode& node, bool) {
    bool changed = false;
    auto before = node.attributes.size();
    std::erase_if(node.attributes, [&](const auto& kv) {
        return is_presentational_attribute(kv.first, node.name);
    });
    changed |= before != node.attributes.size();

    auto kids = node.children.size();
    std::erase_if(node.children, [](const MathNode& c) { return c.name == "mspace"; });
    changed |= kids != node.children.size();

    if ((node.name == "mstyle" || node.name == "mpadded") && node.attributes.empty()) {
        node.name = "mrow";
        changed = true;
    }
    return changed;
}

// C2: a row with a single child is replaced by that child; elements with an
// inferred row keep a single (row) child.
bool flatten_rows(MathNode& node, bool) {
    bool changed = false;
    if (has_inferred_row(node.name) && node.children.size() > 1) {
        MathNode row("mrow", std::move(node.children));
        node.children.clear();
        node.children.push_back(std::move(row));
        changed = true;
    }
    // Child rows with exactly one child collapse into that child.
    for (auto& child : node.children) {
        while (is_row(child) && child.children.size() == 1 && child.attributes.empty()) {
            MathNode inner = std::move(child.children.front());
            child = std::move(inner);
            changed = true;
        }
    }
    if (is_row(node) && node.children.size() == 1 && node.attributes.empty()) {
        MathNode inner = std::move(node.children.front());
        node = std::move(inner);
        changed = true;
    }
    if (node.name == "math" && node.attributes.empty()) {
        node.name = "mrow";
        changed = true;
    }
    return changed;
}

std::vector<std::string> split_glyphs(std::string_view s) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < s.size();) {
        auto c = static_cast<unsigned char>(s[i]);
        std::size_t len = c < 0x80 ? 1 : c < 0xE0 ? 2 : c < 0xF0 ? 3 : 4;
        len = std::min(len, s.size() - i);
        if (s[i] != ' ' && s[i] != '\t' && s[i] != '\n' && s[i] != '\r')
            out.emplace_back(s.substr(i, len));
        i += len;
    }
    return out;
}

// C3: mfenced becomes an explicit row of fences and separators.
bool expand_mfenced(MathNode& node, bool) {
    if (node.name != "mfenced") return false;
    const std::string* open_attr = node.attribute("open");
    const std::string* close_attr = node.attribute("close");
    const std::string* sep_attr = node.attribute("separators");
    std::string open = open_attr ? *open_attr : "(";
    std::string close = close_attr ? *close_attr : ")";
    std::vector<std::string> seps = split_glyphs(sep_attr ? *sep_attr : ",");

    std::vector<MathNode> content;
    for (std::size_t i = 0; i < node.children.size(); ++i) {
        if (i > 0 && !seps.empty())
            content.emplace_back("mo", normalize_operator_glyph(seps[std::min(i - 1, seps.size() - 1)]));
        content.push_back(std::move(node.children[i]));
    }

    MathNode row("mrow");
    if (!open.empty()) row.children.emplace_back("mo", normalize_operator_glyph(open));
    if (content.size() == 1)
        row.children.push_back(std::move(content.front()));
    else if (!content.empty())
        row.children.emplace_back("mrow", std::move(content));
    if (!close.empty()) row.children.emplace_back("mo", normalize_operator_glyph(close));
    node = std::move(row);
    return true;
}

// C4: one times glyph, one minus glyph; implicit products become explicit.
bool normalize_operators(MathNode& node, bool) {
    bool changed = false;
    if (is_mo(node) && node.text) {
        std::string glyph = normalize_operator_glyph(*node.text);
        if (glyph != *node.text) {
            node.text = std::move(glyph);
            changed = true;
        }
    }
    if (!is_row(node) || node.children.size() < 2) return changed;

    auto operand = [](const MathNode& n) { return !is_mo(n) && n.name != "mtext"; };
    std::vector<MathNode> out;
    out.reserve(node.children.size() * 2);
    for (auto& child : node.children) {
        if (!out.empty() && operand(out.back()) && operand(child)) {
            out.emplace_back("mo", std::string(kCanonicalTimes));
            changed = true;
        }
        out.push_back(std::move(child));
    }
    node.children = std::move(out);
    return changed;
}

// C5: annotations go, semantics unwraps to its first child.
bool drop_annotations(MathNode& node, bool) {
    bool changed = false;
    auto before = node.children.size();
    std::erase_if(node.children, [](const MathNode& c) {
        return c.name == "annotation" || c.name == "annotation-xml";
    });
    changed |= before != node.children.size();
    if (node.name == "semantics") {
        if (node.children.empty()) {
            node = MathNode("mrow");
        } else {
            MathNode inner = std::move(node.children.front());
            node = std::move(inner);
        }
        changed = true;
    }
    return changed;
}

// C6: msubsup(b, s, p) -> msup(msub(b, s), p); munderover likewise.
bool split_scripts(MathNode& node, bool) {
    const char* inner = nullptr;
    const char* outer = nullptr;
    if (node.name == "msubsup") {
        inner = "msub";
        outer = "msup";
    } else if (node.name == "munderover") {
        inner = "munder";
        outer = "mover";
    }
    if (!inner || node.children.size() != 3) return false;
    MathNode script(inner);
    script.children.push_back(std::move(node.children[0]));
    script.children.push_back(std::move(node.children[1]));
    MathNode top(outer);
    top.attributes = std::move(node.attributes);
    top.children.push_back(std::move(script));
    top.children.push_back(std::move(node.children[2]));
    node = std::move(top);
    return true;
}

constexpr std::array<CanonicalizationRule, 6> kRules = {{
    {"C5", "drop annotation/annotation-xml children and unwrap semantics", drop_annotations,
     false},
    {"C1", "strip presentational attributes, wrappers and spacing", strip_presentation, false},
    {"C6", "rewrite msubsup as msup of msub (munderover as mover of munder)", split_scripts,
     true},
    {"C3", "expand mfenced into an explicit row of fences and separators", expand_mfenced, true},
    {"C4", "normalize times/minus glyphs and make implicit products explicit",
     normalize_operators, true},
    {"C2", "flatten redundant rows", flatten_rows, false},
}};

bool apply_rules(MathNode& node, bool presentation) {
    bool changed = false;
    for (auto& child : node.children) changed |= apply_rules(child, presentation);
    for (const auto& rule : kRules) {
        if (rule.presentation_only && !presentation) continue;
        changed |= rule.apply(node, presentation);
    }
    return changed;
}

}  // namespace

std::span<const CanonicalizationRule> canonicalization_rules() { return kRules; }

std::string normalize_operator_glyph(std::string_view glyph) {
    if (glyph == "*" || glyph == "×" || glyph == "⋅" || glyph == "·" ||
        glyph == "∗" || glyph == "⁢")
        return std::string(kCanonicalTimes);
    if (glyph == "-" || glyph == "−") return std::string(kCanonicalMinus);
    return std::string(glyph);
}

MathNode canonicalize(MathNode root) {
    bool presentation = !uses_content_markup(root);
    for (int pass = 0; pass < kMaxPasses; ++pass) {
        if (!apply_rules(root, presentation)) return root;
    }
    if (apply_rules(root, presentation))
        throw std::logic_error("canonicalization did not reach a fixpoint");
    return root;
}

}  // namespace mathfind
