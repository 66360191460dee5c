#include "mathfind/corpus_gen.hpp"

#include <array>
#include <fstream>
#include <numeric>
#include <string_view>

#include "json.hpp"
#include "mathfind/error.hpp"

namespace fs = std::filesystem;

namespace mathfind {

namespace {

// Plain `%` keeps draws identical across standard libraries.
std::size_t draw(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

constexpr std::array<std::string_view, 26> kVariables = {
    "a", "b", "c", "d", "f", "g", "h", "k", "m", "n", "p", "q", "r",
    "s", "t", "u", "v", "w", "x", "y", "z", "α", "β", "θ", "λ", "μ"};

constexpr std::array<std::string_view, 5> kOperators = {"+", "−", "-", "×", "⁢"};

constexpr std::array<std::string_view, 64> kWords = {
    "the",        "of",        "function",   "equation",  "integral",   "series",
    "converges",  "bounded",   "continuous", "derivative", "matrix",    "vector",
    "space",      "theorem",   "lemma",      "proof",     "follows",    "therefore",
    "assume",     "consider",  "denote",     "energy",    "field",      "particle",
    "operator",   "linear",    "nonlinear",  "solution",  "boundary",   "condition",
    "estimate",   "inequality", "norm",      "limit",     "sequence",   "polynomial",
    "root",       "prime",     "number",     "algebra",   "group",      "ring",
    "manifold",   "curvature", "metric",     "tensor",    "eigenvalue", "spectrum",
    "probability", "random",   "variable",   "expected",  "value",      "distribution",
    "formula",    "searching", "generalizations", "agreed", "is",       "a",
    "and",        "we",        "obtain",     "hence"};

Expr leaf(std::mt19937_64& rng) {
    Expr e;
    if (draw(rng, 5) < 3) {
        e.kind = Expr::Kind::variable;
        e.literal = std::string(kVariables[draw(rng, kVariables.size())]);
    } else {
        e.kind = Expr::Kind::number;
        if (draw(rng, 4) == 0)
            e.literal = std::to_string(draw(rng, 10)) + "." + std::to_string(1 + draw(rng, 9));
        else
            e.literal = std::to_string(draw(rng, 20));
    }
    return e;
}

Expr generate(std::mt19937_64& rng, std::size_t level, std::size_t max_depth) {
    if (level >= max_depth) return leaf(rng);
    if (level > 1 && draw(rng, 2) == 0) return leaf(rng);
    if (level == 1 && draw(rng, 6) == 0) return leaf(rng);
    Expr e;
    switch (draw(rng, 6)) {
        case 0:
        case 1:
            e.kind = Expr::Kind::binary;
            e.literal = std::string(kOperators[draw(rng, kOperators.size())]);
            e.children.push_back(generate(rng, level + 1, max_depth));
            e.children.push_back(generate(rng, level + 1, max_depth));
            break;
        case 2:
            e.kind = Expr::Kind::fraction;
            e.children.push_back(generate(rng, level + 1, max_depth));
            e.children.push_back(generate(rng, level + 1, max_depth));
            break;
        case 3:
        case 4:
            e.kind = Expr::Kind::power;
            if (level + 2 < max_depth && draw(rng, 3) == 0) {
                Expr paren;
                paren.kind = Expr::Kind::paren;
                paren.children.push_back(generate(rng, level + 2, max_depth));
                e.children.push_back(std::move(paren));
            } else {
                e.children.push_back(leaf(rng));
            }
            e.children.push_back(generate(rng, level + 1, max_depth));
            break;
        default:
            e.kind = Expr::Kind::paren;
            e.children.push_back(generate(rng, level + 1, max_depth));
            break;
    }
    return e;
}

void emit(const Expr& e, std::string& out) {
    switch (e.kind) {
        case Expr::Kind::variable:
            out += "<mi>" + e.literal + "</mi>";
            break;
        case Expr::Kind::number:
            out += "<mn>" + e.literal + "</mn>";
            break;
        case Expr::Kind::binary:
            out += "<mrow>";
            emit(e.children[0], out);
            out += "<mo>" + e.literal + "</mo>";
            emit(e.children[1], out);
            out += "</mrow>";
            break;
        case Expr::Kind::fraction:
            out += "<mfrac>";
            emit(e.children[0], out);
            emit(e.children[1], out);
            out += "</mfrac>";
            break;
        case Expr::Kind::power:
            out += "<msup>";
            emit(e.children[0], out);
            emit(e.children[1], out);
            out += "</msup>";
            break;
        case Expr::Kind::paren:
            out += "<mrow><mo>(</mo>";
            emit(e.children[0], out);
            out += "<mo>)</mo></mrow>";
            break;
    }
}

struct Count {
    std::size_t tokens = 0;
    bool has_var = false;
    bool has_const = false;
};

Count count(const Expr& e) {
    Count c;
    c.has_var = e.kind == Expr::Kind::variable;
    c.has_const = e.kind == Expr::Kind::number;
    for (const auto& child : e.children) {
        Count sub = count(child);
        c.tokens += sub.tokens;
        c.has_var |= sub.has_var;
        c.has_const |= sub.has_const;
    }
    c.tokens += 1 + c.has_var + c.has_const + (c.has_var && c.has_const);
    return c;
}

std::string document_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "doc_%06zu.xhtml", i);
    return buf;
}

std::string words(std::mt19937_64& rng, std::size_t n) {
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        if (i) out += ' ';
        out += kWords[draw(rng, kWords.size())];
    }
    return out;
}

std::size_t around(std::mt19937_64& rng, double mean) {
    auto span = static_cast<std::size_t>(mean < 0 ? 0 : mean * 2);
    return draw(rng, span + 1);
}

GeneratedFile make_document(std::mt19937_64& rng, std::size_t index, const CorpusProfile& profile) {
    GeneratedFile file;
    file.meta.path = document_name(index);
    std::size_t nformulae = around(rng, profile.mean_formulae);
    std::size_t nwords = around(rng, profile.mean_words);
    std::string heading = words(rng, 3 + draw(rng, 4));

    std::string& b = file.body;
    b += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    b += "<html xmlns=\"http://www.w3.org/1999/xhtml\">\n";
    b += "<head><title>Document " + std::to_string(index) + ": " + heading + "</title></head>\n";
    b += "<body>\n<h1>" + heading + "</h1>\n<p>";
    // Words are split evenly around the formulae.
    std::size_t slots = nformulae + 1;
    for (std::size_t slot = 0; slot < slots; ++slot) {
        std::size_t n = nwords / slots + (slot < nwords % slots ? 1 : 0);
        if (n) b += words(rng, n);
        if (slot + 1 < slots) {
            Expr e = generate(rng, 1, std::max<std::size_t>(profile.max_depth, 1));
            b += ' ';
            b += to_presentation_mathml(e);
            b += ' ';
            file.meta.formula_tokens.push_back(expected_token_count(e));
        }
        if (slot + 1 < slots && draw(rng, 3) == 0) b += "</p>\n<p>";
    }
    b += "</p>\n</body>\n</html>\n";
    return file;
}

}  // namespace

Expr random_expression(std::mt19937_64& rng, std::size_t max_depth) {
    return generate(rng, 1, std::max<std::size_t>(max_depth, 1));
}

std::string to_presentation_mathml(const Expr& e) {
    std::string out = "<math xmlns=\"http://www.w3.org/1998/Math/MathML\">";
    emit(e, out);
    out += "</math>";
    return out;
}

std::size_t expected_token_count(const Expr& e) { return count(e).tokens; }

std::size_t CorpusManifest::total_formulae() const {
    std::size_t n = 0;
    for (const auto& d : documents) n += d.formula_tokens.size();
    return n;
}

std::size_t CorpusManifest::total_tokens() const {
    std::size_t n = 0;
    for (const auto& d : documents)
        n += std::accumulate(d.formula_tokens.begin(), d.formula_tokens.end(), std::size_t{0});
    return n;
}

std::string CorpusManifest::to_json() const {
    nlohmann::json docs = nlohmann::json::array();
    for (const auto& d : documents)
        docs.push_back({{"path", d.path},
                        {"formulae", d.formula_tokens.size()},
                        {"formula_tokens", d.formula_tokens}});
    nlohmann::json j = {{"seed", seed},
                        {"documents", std::move(docs)},
                        {"total_documents", documents.size()},
                        {"total_formulae", total_formulae()},
                        {"total_tokens", total_tokens()}};
    return j.dump(2) + "\n";
}

std::vector<GeneratedFile> generate_documents(std::uint64_t seed, std::size_t num_docs,
                                              const CorpusProfile& profile) {
    std::mt19937_64 rng(seed);
    std::vector<GeneratedFile> out;
    out.reserve(num_docs);
    for (std::size_t i = 0; i < num_docs; ++i) out.push_back(make_document(rng, i, profile));
    return out;
}

CorpusManifest generate_corpus(std::uint64_t seed, std::size_t num_docs, const fs::path& out_dir,
                               const CorpusProfile& profile) {
    std::error_code ec;
    if (fs::exists(out_dir, ec)) {
        if (!fs::is_directory(out_dir, ec) || !fs::is_empty(out_dir, ec))
            throw NonEmptyDir(out_dir.string());
    } else {
        fs::create_directories(out_dir, ec);
        if (ec) throw IoFailure("cannot create " + out_dir.string() + ": " + ec.message());
    }
    auto write = [](const fs::path& p, std::string_view data) {
        std::ofstream f(p, std::ios::binary);
        f.write(data.data(), static_cast<std::streamsize>(data.size()));
        if (!f) throw IoFailure("cannot write " + p.string());
    };
    CorpusManifest manifest;
    manifest.seed = seed;
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < num_docs; ++i) {
        GeneratedFile file = make_document(rng, i, profile);
        write(out_dir / file.meta.path, file.body);
        manifest.documents.push_back(std::move(file.meta));
    }
    write(out_dir / "manifest.json", manifest.to_json());
    return manifest;
}

}  // namespace mathfind
