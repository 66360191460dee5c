#include "mathfind/formula_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include "mathfind/canonicalize.hpp"

namespace mathfind {

std::string_view to_string(TokenVariant v) {
    switch (v) {
        case TokenVariant::exact: return "exact";
        case TokenVariant::var_unified: return "var_unified";
        case TokenVariant::const_unified: return "const_unified";
        case TokenVariant::both_unified: return "both_unified";
    }
    return "?";
}

void PipelineConfig::validate() const {
    auto open_unit = [](double v) { return v > 0.0 && v < 1.0; };
    if (!open_unit(alpha)) throw std::invalid_argument("alpha must lie in (0,1)");
    if (!open_unit(beta)) throw std::invalid_argument("beta must lie in (0,1)");
    if (!open_unit(gamma)) throw std::invalid_argument("gamma must lie in (0,1)");
    if (max_depth && *max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
}

namespace {

bool is_commutative_glyph(std::string_view g) {
    return g == "+" || g == kCanonicalTimes || g == "=";
}

bool is_content_operator(const MathNode& n) { return n.children.empty() && !n.text; }

bool is_commutative_content_operator(const MathNode& n) {
    return is_content_operator(n) && (n.name == "plus" || n.name == "times" || n.name == "eq");
}

// Operand positions of a flat commutative row: a op b op c ..., one operator.
bool is_flat_commutative_row(const MathNode& row) {
    if (row.name != "mrow" && row.name != "math") return false;
    const auto& kids = row.children;
    if (kids.size() < 3 || kids.size() % 2 == 0) return false;
    const std::string* op = nullptr;
    for (std::size_t i = 0; i < kids.size(); ++i) {
        bool is_op = kids[i].name == "mo";
        if ((i % 2 == 1) != is_op) return false;
        if (!is_op) continue;
        if (!kids[i].text || !is_commutative_glyph(*kids[i].text)) return false;
        if (op && *op != *kids[i].text) return false;
        op = &*kids[i].text;
    }
    return true;
}

void sort_by_serialization(std::vector<MathNode*>& operands) {
    std::vector<std::pair<std::string, MathNode>> keyed;
    keyed.reserve(operands.size());
    for (auto* n : operands) keyed.emplace_back(serialize(*n), std::move(*n));
    std::stable_sort(keyed.begin(), keyed.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 0; i < operands.size(); ++i) *operands[i] = std::move(keyed[i].second);
}

void order_in_place(MathNode& node) {
    for (auto& child : node.children) order_in_place(child);
    std::vector<MathNode*> operands;
    if (is_flat_commutative_row(node)) {
        for (std::size_t i = 0; i < node.children.size(); i += 2)
            operands.push_back(&node.children[i]);
    } else if (node.name == "apply" && node.children.size() >= 3 &&
               is_commutative_content_operator(node.children.front())) {
        for (std::size_t i = 1; i < node.children.size(); ++i)
            operands.push_back(&node.children[i]);
    }
    if (!operands.empty()) sort_by_serialization(operands);
}

void collect(const MathNode& node, std::size_t depth, const PipelineConfig& config,
             std::vector<std::pair<const MathNode*, std::size_t>>& out) {
    if (config.max_depth && depth + 1 > *config.max_depth) return;
    for (std::size_t i = 0; i < node.children.size(); ++i) {
        const MathNode& child = node.children[i];
        if (child.name == "mo") continue;
        if (node.name == "apply" && i == 0 && is_content_operator(child)) continue;
        if (!child.is_leaf() || config.index_leaves) out.emplace_back(&child, depth + 1);
        collect(child, depth + 1, config, out);
    }
}

bool is_variable_leaf(const MathNode& n) {
    return (n.name == "mi" || n.name == "ci") && n.children.empty() && n.text;
}

bool is_constant_leaf(const MathNode& n) {
    return (n.name == "mn" || n.name == "cn") && n.children.empty() && n.text;
}

using Renaming = std::unordered_map<std::string, std::size_t>;

void rename_variables(MathNode& node, Renaming& seen) {
    if (is_variable_leaf(node)) {
        auto [it, fresh] = seen.try_emplace(*node.text, seen.size() + 1);
        node.text = std::string(kVariablePlaceholder) + std::to_string(it->second);
        return;
    }
    for (auto& child : node.children) rename_variables(child, seen);
}

void replace_constants(MathNode& node) {
    if (is_constant_leaf(node)) {
        node.text = std::string(kConstantPlaceholder);
        return;
    }
    for (auto& child : node.children) replace_constants(child);
}

// FNV-1a. Fixed rather than std::hash so unified terms agree between builds.
class Fnv {
public:
    Fnv& add(std::string_view s) {
        for (unsigned char c : s) byte(c);
        byte(0xff);
        return *this;
    }
    Fnv& add(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) byte(static_cast<unsigned char>(v >> (8 * i)));
        return *this;
    }
    std::uint64_t value() const { return h_; }

private:
    void byte(unsigned char c) {
        h_ ^= c;
        h_ *= 1099511628211ull;
    }
    std::uint64_t h_ = 1469598103934665603ull;
};

std::vector<std::size_t> operand_positions(const MathNode& node) {
    std::vector<std::size_t> out;
    if (is_flat_commutative_row(node)) {
        for (std::size_t i = 0; i < node.children.size(); i += 2) out.push_back(i);
    } else if (node.name == "apply" && node.children.size() >= 3 &&
               is_commutative_content_operator(node.children.front())) {
        for (std::size_t i = 1; i < node.children.size(); ++i) out.push_back(i);
    }
    return out;
}

// Canonical labelling of the variables of one tree. Variables are coloured by
// their structural context and the colouring is refined until stable; tied
// variables are individualized one at a time and the smallest resulting
// serialization wins. Operands are ordered by colour-aware subtree hashes, so
// neither names nor input operand order reach the output. Past `kBudget`
// complete labellings the search keeps what it has.
class CanonicalLabeler {
public:
    explicit CanonicalLabeler(const MathNode& root) : root_(root) { scan(root_, nullptr, false); }

    MathNode run() {
        if (vars_.empty()) return root_;
        Colors colors;
        for (const auto& [name, occ] : vars_) colors[name] = 0;
        refine(colors);
        search(colors);
        return std::move(best_tree_);
    }

private:
    using Colors = std::map<std::string, std::uint64_t>;
    using Hashes = std::unordered_map<const MathNode*, std::uint64_t>;
    static constexpr std::size_t kBudget = 256;

    struct Occurrences {
        std::vector<const MathNode*> leaves;
        // parent row when the single occurrence is a commutative operand
        const MathNode* operand_of = nullptr;
    };

    void scan(const MathNode& n, const MathNode* parent, bool operand) {
        if (is_variable_leaf(n)) {
            auto& occ = vars_[*n.text];
            occ.leaves.push_back(&n);
            occ.operand_of = occ.leaves.size() == 1 && operand ? parent : nullptr;
            return;
        }
        auto positions = operand_positions(n);
        for (std::size_t i = 0; i < n.children.size(); ++i)
            scan(n.children[i], &n,
                 std::find(positions.begin(), positions.end(), i) != positions.end());
    }

    std::uint64_t subtree(const MathNode& n, const Colors& colors, Hashes& out) const {
        Fnv h;
        h.add(n.name);
        for (const auto& [k, v] : n.attributes) h.add(k).add(v);
        if (is_variable_leaf(n)) {
            h.add("var").add(colors.at(*n.text));
        } else if (n.text) {
            h.add("text").add(*n.text);
        }
        auto positions = operand_positions(n);
        std::vector<std::uint64_t> operands;
        for (std::size_t i = 0; i < n.children.size(); ++i) {
            std::uint64_t c = subtree(n.children[i], colors, out);
            if (std::find(positions.begin(), positions.end(), i) != positions.end()) {
                operands.push_back(c);
            } else {
                h.add(i).add(c);
            }
        }
        std::sort(operands.begin(), operands.end());
        for (auto c : operands) h.add("operand").add(c);
        return out[&n] = h.value();
    }

    void context(const MathNode& n, std::uint64_t ctx, const Hashes& sub, Hashes& out) const {
        out[&n] = ctx;
        auto positions = operand_positions(n);
        for (std::size_t i = 0; i < n.children.size(); ++i) {
            Fnv h;
            h.add(ctx).add(sub.at(&n)).add(n.children[i].name);
            for (const auto& [k, v] : n.children[i].attributes) h.add(k).add(v);
            if (std::find(positions.begin(), positions.end(), i) != positions.end()) {
                h.add("operand");
            } else {
                h.add(i);
            }
            context(n.children[i], h.value(), sub, out);
        }
    }

    static std::size_t distinct(const Colors& colors) {
        std::vector<std::uint64_t> v;
        for (const auto& [name, c] : colors) v.push_back(c);
        std::sort(v.begin(), v.end());
        return static_cast<std::size_t>(std::unique(v.begin(), v.end()) - v.begin());
    }

    void refine(Colors& colors) const {
        std::size_t classes = distinct(colors);
        while (classes < colors.size()) {
            Hashes sub, ctx;
            subtree(root_, colors, sub);
            context(root_, 0, sub, ctx);
            Colors next;
            for (const auto& [name, occ] : vars_) {
                std::vector<std::uint64_t> seen;
                for (const auto* leaf : occ.leaves) seen.push_back(ctx.at(leaf));
                std::sort(seen.begin(), seen.end());
                Fnv h;
                h.add(colors.at(name));
                for (auto c : seen) h.add(c);
                next[name] = h.value();
            }
            std::size_t refined = distinct(next);
            if (refined == classes) break;
            colors = std::move(next);
            classes = refined;
        }
    }

    MathNode arrange(const MathNode& n, const Hashes& sub) const {
        MathNode out = n;
        auto positions = operand_positions(n);
        std::vector<const MathNode*> operands;
        for (auto p : positions) operands.push_back(&n.children[p]);
        std::stable_sort(operands.begin(), operands.end(), [&](const MathNode* a, const MathNode* b) {
            return sub.at(a) < sub.at(b);
        });
        for (std::size_t i = 0, next = 0; i < n.children.size(); ++i) {
            if (next < positions.size() && positions[next] == i) {
                out.children[i] = arrange(*operands[next++], sub);
            } else {
                out.children[i] = arrange(n.children[i], sub);
            }
        }
        return out;
    }

    void search(const Colors& colors) {
        std::map<std::uint64_t, std::vector<std::string>> classes;
        for (const auto& [name, c] : colors) classes[c].push_back(name);
        auto tied = std::find_if(classes.begin(), classes.end(),
                                 [](const auto& kv) { return kv.second.size() > 1; });
        if (tied == classes.end()) {
            Hashes sub;
            subtree(root_, colors, sub);
            MathNode tree = unify_variables(arrange(root_, sub));
            std::string text = serialize(tree);
            if (leaves_++ == 0 || text < best_text_) {
                best_text_ = std::move(text);
                best_tree_ = std::move(tree);
            }
            return;
        }
        // Lone occurrences in one commutative row are interchangeable; try one.
        std::vector<const MathNode*> rows_tried;
        for (const auto& name : tied->second) {
            const MathNode* row = vars_.at(name).operand_of;
            if (row) {
                if (std::find(rows_tried.begin(), rows_tried.end(), row) != rows_tried.end()) continue;
                rows_tried.push_back(row);
            }
            if (leaves_ >= kBudget) return;
            Colors branch = colors;
            branch[name] = Fnv().add(colors.at(name)).add("individual").value();
            refine(branch);
            search(branch);
        }
    }

    const MathNode& root_;
    std::map<std::string, Occurrences> vars_;
    std::size_t leaves_ = 0;
    std::string best_text_;
    MathNode best_tree_;
};

}  // namespace

MathNode order_operands(MathNode root) {
    order_in_place(root);
    return root;
}

std::vector<std::pair<const MathNode*, std::size_t>> extract_subformulae(
    const MathNode& root, const PipelineConfig& config) {
    std::vector<std::pair<const MathNode*, std::size_t>> out;
    out.emplace_back(&root, 0);
    collect(root, 0, config, out);
    return out;
}

MathNode unify_variables(MathNode root) {
    std::unordered_map<std::string, std::size_t> seen;
    rename_variables(root, seen);
    return root;
}

MathNode unify_constants(MathNode root) {
    replace_constants(root);
    return root;
}

MathNode unify_variables_canonical(const MathNode& root) {
    return CanonicalLabeler(root).run();
}

std::vector<MathToken> tokenize_formula(const Formula& formula, const PipelineConfig& config) {
    MathNode ordered = order_operands(formula.root);
    std::vector<MathToken> tokens;
    for (const auto& [node, depth] : extract_subformulae(ordered, config)) {
        auto emit = [&](std::string term, double weight, TokenVariant variant) {
            tokens.push_back({std::move(term), weight, variant, depth, formula.ordinal,
                              formula.doc_span});
        };
        const double base = std::pow(config.alpha, static_cast<double>(depth));
        std::string exact = serialize(*node);
        MathNode constants = unify_constants(*node);
        std::string var_term = serialize(unify_variables_canonical(*node));
        std::string const_term = serialize(constants);
        std::string both_term = serialize(unify_variables_canonical(constants));

        bool var_differs = var_term != exact;
        bool const_differs = const_term != exact;
        bool both_differs = both_term != exact && both_term != var_term && both_term != const_term;
        emit(std::move(exact), base, TokenVariant::exact);
        if (var_differs) emit(std::move(var_term), base * config.beta, TokenVariant::var_unified);
        if (const_differs)
            emit(std::move(const_term), base * config.gamma, TokenVariant::const_unified);
        if (both_differs)
            emit(std::move(both_term), base * config.beta * config.gamma,
                 TokenVariant::both_unified);
    }
    return tokens;
}

}  // namespace mathfind
