#include "mathfind/latex.hpp"

#include <cctype>
#include <optional>
#include <unordered_map>

#include "mathfind/canonicalize.hpp"
#include "mathfind/error.hpp"

namespace mathfind {

namespace {

using Kind = LatexNode::Kind;

const std::unordered_map<std::string_view, std::string_view>& greek_letters() {
    static const std::unordered_map<std::string_view, std::string_view> table = {
        {"alpha", "α"}, {"beta", "β"}, {"gamma", "γ"}, {"delta", "δ"},
        {"epsilon", "ε"}, {"varepsilon", "ϵ"}, {"zeta", "ζ"}, {"eta", "η"},
        {"theta", "θ"}, {"vartheta", "ϑ"}, {"iota", "ι"}, {"kappa", "κ"},
        {"lambda", "λ"}, {"mu", "μ"}, {"nu", "ν"}, {"xi", "ξ"},
        {"omicron", "ο"}, {"pi", "π"}, {"varpi", "ϖ"}, {"rho", "ρ"},
        {"varrho", "ϱ"}, {"sigma", "σ"}, {"varsigma", "ς"}, {"tau", "τ"},
        {"upsilon", "υ"}, {"phi", "φ"}, {"varphi", "ϕ"}, {"chi", "χ"},
        {"psi", "ψ"}, {"omega", "ω"}, {"Gamma", "Γ"}, {"Delta", "Δ"},
        {"Theta", "Θ"}, {"Lambda", "Λ"}, {"Xi", "Ξ"}, {"Pi", "Π"},
        {"Sigma", "Σ"}, {"Upsilon", "Υ"}, {"Phi", "Φ"}, {"Psi", "Ψ"},
        {"Omega", "Ω"},
    };
    return table;
}

const std::unordered_map<std::string_view, std::string_view>& operator_commands() {
    static const std::unordered_map<std::string_view, std::string_view> table = {
        {"cdot", "×"}, {"times", "×"}, {"leq", "≤"}, {"le", "≤"},
        {"geq", "≥"}, {"ge", "≥"}, {"neq", "≠"}, {"ne", "≠"},
        {"to", "→"}, {"rightarrow", "→"}, {"pm", "±"},
    };
    return table;
}

const std::unordered_map<std::string_view, std::string_view>& big_operators() {
    static const std::unordered_map<std::string_view, std::string_view> table = {
        {"sum", "∑"}, {"prod", "∏"}, {"int", "∫"}};
    return table;
}

bool is_function_name(std::string_view name) {
    return name == "sin" || name == "cos" || name == "tan" || name == "log" || name == "ln" ||
           name == "exp" || name == "lim";
}

bool is_spacing_command(std::string_view name) {
    return name == "," || name == ";" || name == "!" || name == " " || name == ":" ||
           name == "quad" || name == "qquad";
}

LatexNode make(Kind kind, std::size_t pos, std::string literal = {},
               std::vector<LatexNode> children = {}) {
    LatexNode n;
    n.kind = kind;
    n.position = pos;
    n.literal = std::move(literal);
    n.children = std::move(children);
    return n;
}

class LatexParser {
public:
    explicit LatexParser(std::string_view in) : in_(in) {}

    LatexNode parse() {
        LatexNode root = make(Kind::group, 0);
        root.children = parse_row(Closer::end, 0);
        return root;
    }

private:
    enum class Closer { end, brace, paren, bracket, right };

    bool at_end() const { return pos_ >= in_.size(); }

    void skip_space() {
        while (!at_end() && std::isspace(static_cast<unsigned char>(in_[pos_]))) ++pos_;
    }

    // Reads the name following a backslash at pos_ (pos_ points at '\').
    std::string_view command_name() {
        std::size_t start = pos_ + 1;
        std::size_t end = start;
        while (end < in_.size() && std::isalpha(static_cast<unsigned char>(in_[end]))) ++end;
        if (end == start && start < in_.size()) end = start + 1;
        return in_.substr(start, end - start);
    }

    std::vector<LatexNode> parse_row(Closer closer, std::size_t open_pos) {
        std::vector<LatexNode> row;
        for (;;) {
            skip_space();
            if (at_end()) {
                if (closer != Closer::end) throw UnbalancedGroup(open_pos);
                return row;
            }
            char c = in_[pos_];
            if (c == '}') {
                if (closer != Closer::brace) throw UnbalancedGroup(pos_);
                ++pos_;
                return row;
            }
            if (c == ')' || c == ']') {
                Closer expected = c == ')' ? Closer::paren : Closer::bracket;
                if (closer != expected) throw UnbalancedGroup(pos_);
                return row;  // the caller consumes the fence
            }
            if (c == '\\' && command_name() == "right") {
                if (closer != Closer::right) throw UnbalancedGroup(pos_);
                return row;
            }
            if (auto atom = parse_scripted()) row.push_back(std::move(*atom));
        }
    }

    std::optional<LatexNode> parse_scripted() {
        std::size_t start = pos_;
        std::optional<LatexNode> base = parse_atom();
        if (!base) return std::nullopt;
        std::optional<LatexNode> sub, sup;
        for (;;) {
            skip_space();
            if (at_end() || (in_[pos_] != '^' && in_[pos_] != '_')) break;
            char mark = in_[pos_];
            std::size_t mark_pos = pos_;
            ++pos_;
            auto& slot = mark == '^' ? sup : sub;
            if (slot) throw UnsupportedCommand(std::string(1, mark), mark_pos);
            slot = parse_argument(mark_pos);
        }
        LatexNode node = std::move(*base);
        if (sub) node = make(Kind::subscript, start, {}, {std::move(node), std::move(*sub)});
        if (sup) node = make(Kind::superscript, start, {}, {std::move(node), std::move(*sup)});
        return node;
    }

    // A script or macro argument: a braced group or a single token.
    LatexNode parse_argument(std::size_t owner_pos) {
        skip_space();
        if (at_end()) throw UnbalancedGroup(owner_pos);
        char c = in_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            return make(Kind::number, pos_++, std::string(1, c));
        }
        if (c == '^' || c == '_' || c == '}' || c == ')' || c == ']')
            throw UnbalancedGroup(pos_);
        std::optional<LatexNode> atom = parse_atom();
        if (!atom) return parse_argument(owner_pos);
        return std::move(*atom);
    }

    LatexNode parse_fenced(std::size_t open_pos, std::string open, Closer closer) {
        LatexNode inner = make(Kind::group, open_pos);
        inner.children = parse_row(closer, open_pos);
        std::string close;
        if (closer == Closer::right) {
            std::size_t right_pos = pos_;
            pos_ += 6;  // "\right"
            close = parse_delimiter(right_pos, false);
        } else {
            close = std::string(1, in_[pos_]);
            ++pos_;
        }
        LatexNode fenced = make(Kind::group, open_pos);
        if (!open.empty()) fenced.children.push_back(make(Kind::op, open_pos, std::move(open)));
        fenced.children.push_back(std::move(inner));
        if (!close.empty()) fenced.children.push_back(make(Kind::op, pos_ - 1, std::move(close)));
        return fenced;
    }

    // Delimiter after \left or \right: ( ) [ ] or '.' (none).
    std::string parse_delimiter(std::size_t command_pos, bool opening) {
        skip_space();
        if (at_end()) throw UnbalancedGroup(command_pos);
        char d = in_[pos_];
        bool ok = d == '.' || (opening ? (d == '(' || d == '[') : (d == ')' || d == ']'));
        if (!ok) {
            if (d == '\\') throw UnsupportedCommand("\\" + std::string(command_name()), pos_);
            throw UnsupportedCommand(std::string(opening ? "\\left" : "\\right") + d, command_pos);
        }
        ++pos_;
        return d == '.' ? std::string() : std::string(1, d);
    }

    std::optional<LatexNode> parse_atom() {
        std::size_t start = pos_;
        char c = in_[pos_];
        auto u = static_cast<unsigned char>(c);
        if (std::isalpha(u)) {
            ++pos_;
            return make(Kind::symbol, start, std::string(1, c));
        }
        if (std::isdigit(u) || (c == '.' && pos_ + 1 < in_.size() &&
                                std::isdigit(static_cast<unsigned char>(in_[pos_ + 1])))) {
            bool seen_dot = false;
            while (!at_end()) {
                char d = in_[pos_];
                if (std::isdigit(static_cast<unsigned char>(d))) {
                    ++pos_;
                } else if (d == '.' && !seen_dot && pos_ + 1 < in_.size() &&
                           std::isdigit(static_cast<unsigned char>(in_[pos_ + 1]))) {
                    seen_dot = true;
                    ++pos_;
                } else {
                    break;
                }
            }
            return make(Kind::number, start, std::string(in_.substr(start, pos_ - start)));
        }
        if (u >= 0x80) {
            std::size_t len = u < 0xE0 ? 2 : u < 0xF0 ? 3 : 4;
            len = std::min(len, in_.size() - pos_);
            pos_ += len;
            return make(Kind::symbol, start, std::string(in_.substr(start, len)));
        }
        switch (c) {
            case '{': {
                ++pos_;
                LatexNode group = make(Kind::group, start);
                group.children = parse_row(Closer::brace, start);
                return group;
            }
            case '(': ++pos_; return parse_fenced(start, "(", Closer::paren);
            case '[': ++pos_; return parse_fenced(start, "[", Closer::bracket);
            case '+': case '=': case '<': case '>': case '/': case ',': case '|': case '!':
                ++pos_;
                return make(Kind::op, start, std::string(1, c));
            case '-': case '*':
                ++pos_;
                return make(Kind::op, start, normalize_operator_glyph(std::string(1, c)));
            case '\\': return parse_command();
            default: throw UnsupportedCommand(std::string(1, c), start);
        }
    }

    std::optional<LatexNode> parse_command() {
        std::size_t start = pos_;
        std::string_view name = command_name();
        if (name.empty()) throw UnsupportedCommand("\\", start);
        pos_ += 1 + name.size();
        std::string full = "\\" + std::string(name);

        if (is_spacing_command(name)) return std::nullopt;
        if (name == "frac") {
            LatexNode num = parse_argument(start);
            LatexNode den = parse_argument(start);
            return make(Kind::fraction, start, {}, {std::move(num), std::move(den)});
        }
        if (name == "sqrt") {
            skip_space();
            if (!at_end() && in_[pos_] == '[') throw UnsupportedCommand("\\sqrt[", start);
            return make(Kind::sqrt, start, {}, {parse_argument(start)});
        }
        if (name == "left") {
            std::string open = parse_delimiter(start, true);
            return parse_fenced(start, std::move(open), Closer::right);
        }
        if (name == "right") throw UnbalancedGroup(start);
        if (name == "infty") return make(Kind::symbol, start, "∞");
        if (auto it = greek_letters().find(name); it != greek_letters().end())
            return make(Kind::symbol, start, std::string(it->second));
        if (auto it = operator_commands().find(name); it != operator_commands().end())
            return make(Kind::op, start, std::string(it->second));
        if (auto it = big_operators().find(name); it != big_operators().end())
            return make(Kind::big_operator, start, std::string(it->second));
        if (is_function_name(name)) return make(Kind::function, start, std::string(name));
        throw UnsupportedCommand(full, start);
    }

    std::string_view in_;
    std::size_t pos_ = 0;
};

// Bases whose scripts sit under/over them rather than at the side.
bool takes_limits(const LatexNode& base) {
    return (base.kind == Kind::big_operator && base.literal != "∫") ||
           (base.kind == Kind::function && base.literal == "lim");
}

const LatexNode& script_head(const LatexNode& n) {
    if (n.kind == Kind::superscript || n.kind == Kind::subscript)
        return script_head(n.children.front());
    return n;
}

MathNode convert(const LatexNode& n) {
    switch (n.kind) {
        case Kind::symbol: return MathNode("mi", n.literal);
        case Kind::number: return MathNode("mn", n.literal);
        case Kind::op: return MathNode("mo", normalize_operator_glyph(n.literal));
        case Kind::big_operator: return MathNode("mo", n.literal);
        case Kind::function: return MathNode("mi", n.literal);
        case Kind::fraction:
            return MathNode("mfrac", std::vector<MathNode>{convert(n.children[0]),
                                                           convert(n.children[1])});
        case Kind::sqrt:
            return MathNode("msqrt", std::vector<MathNode>{convert(n.children[0])});
        case Kind::superscript:
        case Kind::subscript: {
            bool limits = takes_limits(script_head(n));
            const char* name = n.kind == Kind::superscript ? (limits ? "mover" : "msup")
                                                           : (limits ? "munder" : "msub");
            return MathNode(name, std::vector<MathNode>{convert(n.children[0]),
                                                        convert(n.children[1])});
        }
        case Kind::group: {
            MathNode row("mrow");
            for (std::size_t i = 0; i < n.children.size(); ++i) {
                const LatexNode& child = n.children[i];
                row.children.push_back(convert(child));
                bool is_function = script_head(child).kind == Kind::function;
                bool has_argument = i + 1 < n.children.size() &&
                                    n.children[i + 1].kind != Kind::op;
                if (is_function && has_argument) row.children.emplace_back("mo", "⁡");
            }
            return row;
        }
    }
    return MathNode("mrow");
}

}  // namespace

LatexNode parse_latex(std::string_view input) { return LatexParser(input).parse(); }

MathNode latex_to_mathml(const LatexNode& ast) { return canonicalize(convert(ast)); }

MathNode latex_to_mathml(std::string_view input) { return latex_to_mathml(parse_latex(input)); }

}  // namespace mathfind
