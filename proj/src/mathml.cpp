#include "mathfind/mathml.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>

#include "mathfind/error.hpp"

namespace mathfind {

const std::string* MathNode::attribute(std::string_view key) const {
    for (const auto& [k, v] : attributes)
        if (k == key) return &v;
    return nullptr;
}

void MathNode::set_attribute(std::string key, std::string value) {
    for (auto& [k, v] : attributes) {
        if (k == key) {
            v = std::move(value);
            return;
        }
    }
    attributes.emplace_back(std::move(key), std::move(value));
}

bool MathNode::erase_attribute(std::string_view key) {
    auto it = std::find_if(attributes.begin(), attributes.end(),
                           [&](const auto& kv) { return kv.first == key; });
    if (it == attributes.end()) return false;
    attributes.erase(it);
    return true;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

namespace {

// The XML predefined entities plus the MathML operator and Greek subset seen
// in MathML corpora.
const std::unordered_map<std::string_view, char32_t>& entity_table() {
    static const std::unordered_map<std::string_view, char32_t> table = {
        {"lt", U'<'}, {"gt", U'>'}, {"amp", U'&'}, {"quot", U'"'}, {"apos", U'\''},
        {"nbsp", 0xA0}, {"InvisibleTimes", 0x2062}, {"it", 0x2062},
        {"ApplyFunction", 0x2061}, {"af", 0x2061}, {"InvisibleComma", 0x2063},
        {"ic", 0x2063}, {"InvisiblePlus", 0x2064}, {"minus", 0x2212}, {"times", 0xD7},
        {"sdot", 0x22C5}, {"middot", 0xB7}, {"centerdot", 0xB7}, {"divide", 0xF7},
        {"div", 0xF7}, {"plusmn", 0xB1}, {"pm", 0xB1}, {"PlusMinus", 0xB1},
        {"mnplus", 0x2213}, {"mp", 0x2213}, {"le", 0x2264}, {"leq", 0x2264},
        {"LessEqual", 0x2264}, {"ge", 0x2265}, {"geq", 0x2265}, {"GreaterEqual", 0x2265},
        {"ne", 0x2260}, {"NotEqual", 0x2260}, {"equiv", 0x2261}, {"approx", 0x2248},
        {"sim", 0x223C}, {"prop", 0x221D}, {"infin", 0x221E}, {"infty", 0x221E},
        {"sum", 0x2211}, {"Sum", 0x2211}, {"prod", 0x220F}, {"Product", 0x220F},
        {"int", 0x222B}, {"Integral", 0x222B}, {"partial", 0x2202},
        {"PartialD", 0x2202}, {"nabla", 0x2207}, {"Del", 0x2207}, {"radic", 0x221A},
        {"rarr", 0x2192}, {"rightarrow", 0x2192}, {"RightArrow", 0x2192}, {"to", 0x2192},
        {"larr", 0x2190}, {"leftarrow", 0x2190}, {"harr", 0x2194}, {"rArr", 0x21D2},
        {"Implies", 0x21D2}, {"hArr", 0x21D4}, {"iff", 0x21D4}, {"isin", 0x2208},
        {"in", 0x2208}, {"Element", 0x2208}, {"notin", 0x2209}, {"sub", 0x2282},
        {"subset", 0x2282}, {"sube", 0x2286}, {"sup", 0x2283}, {"supe", 0x2287},
        {"cap", 0x2229}, {"cup", 0x222A}, {"empty", 0x2205}, {"emptyset", 0x2205},
        {"forall", 0x2200}, {"ForAll", 0x2200}, {"exist", 0x2203}, {"Exists", 0x2203},
        {"not", 0xAC}, {"and", 0x2227}, {"or", 0x2228}, {"deg", 0xB0}, {"prime", 0x2032},
        {"Prime", 0x2033}, {"hellip", 0x2026}, {"ctdot", 0x22EF}, {"vellip", 0x22EE},
        {"lpar", U'('}, {"rpar", U')'}, {"lsqb", U'['}, {"rsqb", U']'}, {"lcub", U'{'},
        {"rcub", U'}'}, {"verbar", U'|'}, {"vert", U'|'}, {"Verbar", 0x2016},
        {"langle", 0x27E8}, {"rangle", 0x27E9}, {"lceil", 0x2308}, {"rceil", 0x2309},
        {"lfloor", 0x230A}, {"rfloor", 0x230B}, {"ThinSpace", 0x2009},
        {"thinsp", 0x2009}, {"MediumSpace", 0x205F}, {"NegativeThinSpace", 0x200B},
        {"ZeroWidthSpace", 0x200B}, {"DifferentialD", 0x2146}, {"dd", 0x2146},
        {"ExponentialE", 0x2147}, {"ee", 0x2147}, {"ImaginaryI", 0x2148}, {"ii", 0x2148},
        {"Rfr", 0x211C}, {"real", 0x211C}, {"image", 0x2111}, {"Ropf", 0x211D},
        {"reals", 0x211D}, {"Nopf", 0x2115}, {"naturals", 0x2115}, {"Zopf", 0x2124},
        {"integers", 0x2124}, {"Qopf", 0x211A}, {"rationals", 0x211A}, {"Copf", 0x2102},
        {"complexes", 0x2102}, {"ell", 0x2113}, {"hbar", 0x210F}, {"planck", 0x210F},
        {"circ", 0x2218}, {"compfn", 0x2218}, {"ast", 0x2217}, {"lowast", 0x2217},
        {"alpha", 0x3B1}, {"beta", 0x3B2}, {"gamma", 0x3B3}, {"delta", 0x3B4},
        {"epsi", 0x3B5}, {"epsilon", 0x3B5}, {"epsiv", 0x3F5}, {"varepsilon", 0x3F5},
        {"zeta", 0x3B6}, {"eta", 0x3B7}, {"theta", 0x3B8}, {"thetav", 0x3D1},
        {"vartheta", 0x3D1}, {"iota", 0x3B9}, {"kappa", 0x3BA}, {"lambda", 0x3BB},
        {"mu", 0x3BC}, {"nu", 0x3BD}, {"xi", 0x3BE}, {"omicron", 0x3BF}, {"pi", 0x3C0},
        {"piv", 0x3D6}, {"varpi", 0x3D6}, {"rho", 0x3C1}, {"rhov", 0x3F1},
        {"varrho", 0x3F1}, {"sigma", 0x3C3}, {"sigmav", 0x3C2}, {"varsigma", 0x3C2},
        {"tau", 0x3C4}, {"upsi", 0x3C5}, {"upsilon", 0x3C5}, {"phi", 0x3C6},
        {"phiv", 0x3D5}, {"varphi", 0x3D5}, {"chi", 0x3C7}, {"psi", 0x3C8},
        {"omega", 0x3C9}, {"Alpha", 0x391}, {"Beta", 0x392}, {"Gamma", 0x393},
        {"Delta", 0x394}, {"Epsilon", 0x395}, {"Zeta", 0x396}, {"Eta", 0x397},
        {"Theta", 0x398}, {"Iota", 0x399}, {"Kappa", 0x39A}, {"Lambda", 0x39B},
        {"Mu", 0x39C}, {"Nu", 0x39D}, {"Xi", 0x39E}, {"Omicron", 0x39F}, {"Pi", 0x3A0},
        {"Rho", 0x3A1}, {"Sigma", 0x3A3}, {"Tau", 0x3A4}, {"Upsilon", 0x3A5},
        {"Upsi", 0x3A5}, {"Phi", 0x3A6}, {"Chi", 0x3A7}, {"Psi", 0x3A8}, {"Omega", 0x3A9},
    };
    return table;
}

bool is_xml_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

bool is_name_char(char c) {
    auto u = static_cast<unsigned char>(c);
    return std::isalnum(u) || c == '-' || c == '_' || c == ':' || c == '.' || u >= 0x80;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_xml_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_xml_space(s.back())) s.remove_suffix(1);
    return s;
}

std::string local_name(std::string_view qname) {
    auto colon = qname.rfind(':');
    return std::string(colon == std::string_view::npos ? qname : qname.substr(colon + 1));
}

class XmlParser {
public:
    explicit XmlParser(std::string_view in) : in_(in) {}

    MathNode parse_document() {
        if (in_.substr(0, 3) == "\xEF\xBB\xBF") pos_ = 3;
        skip_misc();
        if (at_end() || peek() != '<') fail("expected root element");
        MathNode root = parse_element();
        skip_misc();
        if (!at_end()) fail("trailing content after root element");
        return root;
    }

private:
    [[noreturn]] void fail(const std::string& reason) const { throw MalformedXml(reason, pos_); }

    bool at_end() const { return pos_ >= in_.size(); }
    char peek() const { return in_[pos_]; }
    bool starts_with(std::string_view s) const { return in_.substr(pos_, s.size()) == s; }

    void skip_space() {
        while (!at_end() && is_xml_space(peek())) ++pos_;
    }

    void skip_until(std::string_view terminator, const char* what) {
        auto end = in_.find(terminator, pos_);
        if (end == std::string_view::npos) fail(std::string("unterminated ") + what);
        pos_ = end + terminator.size();
    }

    // Whitespace, comments, processing instructions and DOCTYPE.
    void skip_misc() {
        for (;;) {
            skip_space();
            if (starts_with("<!--")) {
                skip_until("-->", "comment");
            } else if (starts_with("<?")) {
                skip_until("?>", "processing instruction");
            } else if (starts_with("<!DOCTYPE") || starts_with("<!doctype")) {
                skip_until(">", "DOCTYPE");
            } else {
                return;
            }
        }
    }

    std::string_view parse_name() {
        std::size_t start = pos_;
        while (!at_end() && is_name_char(peek())) ++pos_;
        if (start == pos_) fail("expected a name");
        return in_.substr(start, pos_ - start);
    }

    void check_char(char c) const {
        auto u = static_cast<unsigned char>(c);
        if (u < 0x20 && c != '\t' && c != '\n' && c != '\r') fail("illegal control character");
    }

    // Decodes `&...;` at pos_ into out.
    void parse_reference(std::string& out) {
        std::size_t start = pos_;
        auto semi = in_.find(';', pos_);
        if (semi == std::string_view::npos || semi - pos_ > 40) fail("unterminated entity");
        std::string_view body = in_.substr(pos_ + 1, semi - pos_ - 1);
        if (body.empty()) fail("empty entity");
        if (body[0] == '#') {
            char32_t cp = 0;
            bool hex = body.size() > 1 && (body[1] == 'x' || body[1] == 'X');
            std::string_view digits = body.substr(hex ? 2 : 1);
            if (digits.empty()) fail("bad character reference");
            for (char c : digits) {
                int v;
                if (c >= '0' && c <= '9')
                    v = c - '0';
                else if (hex && c >= 'a' && c <= 'f')
                    v = c - 'a' + 10;
                else if (hex && c >= 'A' && c <= 'F')
                    v = c - 'A' + 10;
                else
                    fail("bad character reference");
                cp = cp * (hex ? 16 : 10) + static_cast<char32_t>(v);
                if (cp > 0x10FFFF) fail("character reference out of range");
            }
            if (cp == 0 || (cp >= 0xD800 && cp <= 0xDFFF)) fail("illegal character reference");
            append_utf8(out, cp);
        } else {
            const auto& table = entity_table();
            auto it = table.find(body);
            if (it == table.end()) {
                pos_ = start;
                fail("unknown entity &" + std::string(body) + ";");
            }
            append_utf8(out, it->second);
        }
        pos_ = semi + 1;
    }

    std::string parse_attribute_value() {
        if (at_end() || (peek() != '"' && peek() != '\'')) fail("expected quoted attribute value");
        char quote = in_[pos_++];
        std::string value;
        for (;;) {
            if (at_end()) fail("unterminated attribute value");
            char c = peek();
            if (c == quote) {
                ++pos_;
                return value;
            }
            if (c == '<') fail("'<' in attribute value");
            if (c == '&') {
                parse_reference(value);
                continue;
            }
            check_char(c);
            value.push_back(c);
            ++pos_;
        }
    }

    MathNode parse_element() {
        ++pos_;  // '<'
        std::string_view qname = parse_name();
        MathNode node(local_name(qname));
        for (;;) {
            std::size_t before = pos_;
            skip_space();
            if (at_end()) fail("unterminated start tag");
            if (starts_with("/>")) {
                pos_ += 2;
                return node;
            }
            if (peek() == '>') {
                ++pos_;
                break;
            }
            if (before == pos_) fail("expected whitespace before attribute");
            std::string name(parse_name());
            skip_space();
            if (at_end() || peek() != '=') fail("expected '=' after attribute name");
            ++pos_;
            skip_space();
            std::string value = parse_attribute_value();
            if (node.attribute(name)) fail("duplicate attribute " + name);
            node.attributes.emplace_back(std::move(name), std::move(value));
        }

        std::string text;
        bool significant_text = false;
        std::size_t text_pos = 0;
        for (;;) {
            if (at_end()) fail("missing end tag for <" + std::string(qname) + ">");
            char c = peek();
            if (c == '<') {
                if (starts_with("</")) {
                    pos_ += 2;
                    std::string_view close = parse_name();
                    if (close != qname)
                        fail("mismatched end tag </" + std::string(close) + "> for <" +
                             std::string(qname) + ">");
                    skip_space();
                    if (at_end() || peek() != '>') fail("expected '>'");
                    ++pos_;
                    break;
                }
                if (starts_with("<!--")) {
                    skip_until("-->", "comment");
                } else if (starts_with("<![CDATA[")) {
                    pos_ += 9;
                    auto end = in_.find("]]>", pos_);
                    if (end == std::string_view::npos) fail("unterminated CDATA");
                    if (!significant_text) text_pos = pos_;
                    text.append(in_.substr(pos_, end - pos_));
                    significant_text = significant_text || !trim(text).empty();
                    pos_ = end + 3;
                } else if (starts_with("<?")) {
                    skip_until("?>", "processing instruction");
                } else {
                    node.children.push_back(parse_element());
                }
                continue;
            }
            if (c == '&') {
                if (!significant_text) text_pos = pos_;
                parse_reference(text);
                significant_text = significant_text || !trim(text).empty();
                continue;
            }
            check_char(c);
            if (!is_xml_space(c) && !significant_text) {
                significant_text = true;
                text_pos = pos_;
            }
            text.push_back(c);
            ++pos_;
        }

        if (significant_text) {
            if (!node.children.empty()) {
                pos_ = text_pos;
                fail("mixed text and element content in <" + node.name + ">");
            }
            node.text = std::string(trim(text));
        }
        return node;
    }

    std::string_view in_;
    std::size_t pos_ = 0;
};

void escape_into(std::string& out, std::string_view s, bool attribute) {
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"':
                if (attribute)
                    out += "&quot;";
                else
                    out.push_back(c);
                break;
            default: out.push_back(c);
        }
    }
}

void serialize_into(std::string& out, const MathNode& node) {
    out.push_back('<');
    out += node.name;
    if (!node.attributes.empty()) {
        std::vector<const std::pair<std::string, std::string>*> attrs;
        attrs.reserve(node.attributes.size());
        for (const auto& a : node.attributes) attrs.push_back(&a);
        std::sort(attrs.begin(), attrs.end(),
                  [](const auto* a, const auto* b) { return a->first < b->first; });
        for (const auto* a : attrs) {
            out.push_back(' ');
            out += a->first;
            out += "=\"";
            escape_into(out, a->second, true);
            out.push_back('"');
        }
    }
    if (node.children.empty() && !node.text) {
        out += "/>";
        return;
    }
    out.push_back('>');
    if (node.text) escape_into(out, *node.text, false);
    for (const auto& child : node.children) serialize_into(out, child);
    out += "</";
    out += node.name;
    out.push_back('>');
}

char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c + 32) : c; }

bool iequals_at(std::string_view doc, std::size_t pos, std::string_view word, bool fold) {
    if (pos + word.size() > doc.size()) return false;
    for (std::size_t i = 0; i < word.size(); ++i) {
        char c = fold ? ascii_lower(doc[pos + i]) : doc[pos + i];
        if (c != word[i]) return false;
    }
    return true;
}

// Scans host text for <math> / <prefix:math> elements. Throws MalformedXml
// when a math start tag has no matching end tag.
std::vector<ByteSpan> scan_islands(std::string_view doc, bool fold_case) {
    std::vector<ByteSpan> out;
    std::size_t pos = 0;
    while ((pos = doc.find('<', pos)) != std::string_view::npos) {
        if (doc.substr(pos, 4) == "<!--") {
            auto end = doc.find("-->", pos + 4);
            if (end == std::string_view::npos) break;
            pos = end + 3;
            continue;
        }
        std::size_t name_start = pos + 1;
        std::size_t name_end = name_start;
        while (name_end < doc.size() && is_name_char(doc[name_end])) ++name_end;
        std::string_view qname = doc.substr(name_start, name_end - name_start);
        auto colon = qname.rfind(':');
        std::string_view local = colon == std::string_view::npos ? qname : qname.substr(colon + 1);
        bool is_math = local.size() == 4 && iequals_at(local, 0, "math", fold_case);
        if (!is_math || name_end >= doc.size() ||
            !(is_xml_space(doc[name_end]) || doc[name_end] == '>' || doc[name_end] == '/')) {
            pos = name_end > pos + 1 ? name_end : pos + 1;
            continue;
        }
        // End of the start tag, honouring quoted attribute values.
        std::size_t p = name_end;
        char quote = 0;
        while (p < doc.size()) {
            char c = doc[p];
            if (quote) {
                if (c == quote) quote = 0;
            } else if (c == '"' || c == '\'') {
                quote = c;
            } else if (c == '>') {
                break;
            }
            ++p;
        }
        if (p >= doc.size()) throw MalformedXml("unterminated <math> start tag", pos);
        if (doc[p - 1] == '/') {
            out.push_back({pos, p + 1});
            pos = p + 1;
            continue;
        }
        std::size_t search = p + 1;
        std::size_t end = std::string_view::npos;
        while ((search = doc.find("</", search)) != std::string_view::npos) {
            std::size_t q = search + 2;
            bool match = q + qname.size() <= doc.size();
            for (std::size_t i = 0; match && i < qname.size(); ++i) {
                char a = doc[q + i];
                char b = qname[i];
                match = fold_case ? ascii_lower(a) == ascii_lower(b) : a == b;
            }
            if (match) {
                q += qname.size();
                while (q < doc.size() && is_xml_space(doc[q])) ++q;
                if (q < doc.size() && doc[q] == '>') {
                    end = q + 1;
                    break;
                }
            }
            search += 2;
        }
        if (end == std::string_view::npos) throw MalformedXml("missing </math> end tag", pos);
        out.push_back({pos, end});
        pos = end;
    }
    return out;
}

bool is_content_encoding(std::string_view enc) {
    return enc == "MathML-Content" || enc == "application/mathml-content+xml";
}

bool is_presentation_encoding(std::string_view enc) {
    return enc == "MathML-Presentation" || enc == "application/mathml-presentation+xml";
}

}  // namespace

MathNode parse_mathml(std::string_view input) { return XmlParser(input).parse_document(); }

std::string serialize(const MathNode& node) {
    std::string out;
    serialize_into(out, node);
    return out;
}

bool uses_content_markup(const MathNode& node) {
    if (node.name == "apply" || node.name == "ci" || node.name == "cn" || node.name == "csymbol")
        return true;
    return std::any_of(node.children.begin(), node.children.end(), uses_content_markup);
}

std::vector<ByteSpan> find_math_islands(std::string_view document) {
    return scan_islands(document, true);
}

std::vector<Formula> extract_formulae(std::string_view document, HostFormat format) {
    std::vector<Formula> out;
    auto islands = scan_islands(document, format == HostFormat::html);
    for (std::size_t ordinal = 0; ordinal < islands.size(); ++ordinal) {
        ByteSpan span = islands[ordinal];
        MathNode root;
        try {
            root = parse_mathml(document.substr(span.start, span.size()));
        } catch (const MalformedXml& e) {
            throw MalformedXml(e.reason(), span.start + e.position());
        }

        const MathNode* semantics = nullptr;
        if (root.children.size() == 1 && root.children[0].name == "semantics" &&
            !root.children[0].children.empty())
            semantics = &root.children[0];

        if (!semantics) {
            FormulaKind kind =
                uses_content_markup(root) ? FormulaKind::content : FormulaKind::presentation;
            out.push_back({std::move(root), kind, span, ordinal});
            continue;
        }

        auto wrap = [&](std::vector<MathNode> kids) {
            MathNode math(root.name);
            math.attributes = root.attributes;
            math.children = std::move(kids);
            return math;
        };
        const MathNode& primary = semantics->children.front();
        FormulaKind primary_kind =
            uses_content_markup(primary) ? FormulaKind::content : FormulaKind::presentation;
        std::vector<Formula> reps;
        reps.push_back({wrap({primary}), primary_kind, span, ordinal});
        for (std::size_t i = 1; i < semantics->children.size(); ++i) {
            const MathNode& ann = semantics->children[i];
            if (ann.name != "annotation-xml" || ann.children.empty()) continue;
            const std::string* enc = ann.attribute("encoding");
            if (!enc) continue;
            FormulaKind kind;
            if (is_content_encoding(*enc))
                kind = FormulaKind::content;
            else if (is_presentation_encoding(*enc))
                kind = FormulaKind::presentation;
            else
                continue;
            if (kind == primary_kind) continue;
            reps.push_back({wrap(ann.children), kind, span, ordinal});
            break;
        }
        std::stable_sort(reps.begin(), reps.end(), [](const Formula& a, const Formula& b) {
            return a.kind == FormulaKind::presentation && b.kind == FormulaKind::content;
        });
        for (auto& r : reps) out.push_back(std::move(r));
    }
    return out;
}

}  // namespace mathfind
