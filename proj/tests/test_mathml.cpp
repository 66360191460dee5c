#include <gtest/gtest.h>

#include <random>

#include "mathfind/error.hpp"
#include "mathfind/mathml.hpp"
#include "support.hpp"

using namespace mathfind;

TEST(ParseMathml, SingleLeaf) {
    MathNode n = parse_mathml("<mi>x</mi>");
    EXPECT_EQ(n.name, "mi");
    EXPECT_EQ(n.text, "x");
    EXPECT_TRUE(n.children.empty());
}

TEST(ParseMathml, RowKeepsChildOrder) {
    MathNode n = parse_mathml("<mrow><mi>a</mi><mo>+</mo><mi>b</mi></mrow>");
    ASSERT_EQ(n.children.size(), 3u);
    EXPECT_EQ(n.children[0].text, "a");
    EXPECT_EQ(n.children[1].name, "mo");
    EXPECT_EQ(n.children[2].text, "b");
}

TEST(ParseMathml, CharacterReferenceEqualsLiteral) {
    EXPECT_EQ(parse_mathml("<mi>&#x3B1;</mi>"), parse_mathml("<mi>α</mi>"));
    EXPECT_EQ(parse_mathml("<mi>&#945;</mi>"), parse_mathml("<mi>α</mi>"));
    EXPECT_EQ(parse_mathml("<mi>&alpha;</mi>"), parse_mathml("<mi>α</mi>"));
}

TEST(ParseMathml, NamedMathEntities) {
    EXPECT_EQ(parse_mathml("<mo>&InvisibleTimes;</mo>").text, "⁢");
    EXPECT_EQ(parse_mathml("<mo>&ApplyFunction;</mo>").text, "⁡");
    EXPECT_EQ(parse_mathml("<mo>&minus;</mo>").text, "−");
    EXPECT_EQ(parse_mathml("<mo>&times;</mo>").text, "×");
    EXPECT_EQ(parse_mathml("<mi>&Omega;</mi>").text, "Ω");
}

TEST(ParseMathml, InterElementWhitespaceDropped) {
    EXPECT_EQ(parse_mathml("<mrow>\n  <mi> x </mi>\n  <mo>+</mo> <mn>1</mn>\n</mrow>"),
              parse_mathml("<mrow><mi>x</mi><mo>+</mo><mn>1</mn></mrow>"));
}

TEST(ParseMathml, PrologCommentsAndBom) {
    MathNode n = parse_mathml("\xEF\xBB\xBF<?xml version=\"1.0\"?><!-- c --><math><mi>x</mi></math>");
    EXPECT_EQ(n.name, "math");
    ASSERT_EQ(n.children.size(), 1u);
}

TEST(ParseMathml, NamespacePrefixStripped) {
    MathNode n = parse_mathml("<m:math xmlns:m=\"http://www.w3.org/1998/Math/MathML\"><m:mi>x</m:mi></m:math>");
    EXPECT_EQ(n.name, "math");
    EXPECT_EQ(n.children.at(0).name, "mi");
}

TEST(ParseMathml, Errors) {
    EXPECT_THROW(parse_mathml("<mrow><mi>x</mi>"), MalformedXml);
    EXPECT_THROW(parse_mathml("<mrow><mi>x</mo></mrow>"), MalformedXml);
    EXPECT_THROW(parse_mathml("<mi>&nosuchentity;</mi>"), MalformedXml);
    EXPECT_THROW(parse_mathml("<mi a=\"1\" a=\"2\">x</mi>"), MalformedXml);
    EXPECT_THROW(parse_mathml("<mi>\x01</mi>"), MalformedXml);
    EXPECT_THROW(parse_mathml("<mi>x</mi><mi>y</mi>"), MalformedXml);
    EXPECT_THROW(parse_mathml(""), MalformedXml);
}

TEST(ParseMathml, ErrorCarriesPosition) {
    try {
        parse_mathml("<mrow><mi>x</mo></mrow>");
        FAIL();
    } catch (const MalformedXml& e) {
        EXPECT_GE(e.position(), 10u);
        EXPECT_FALSE(e.reason().empty());
    }
}

TEST(Serialize, Leaf) { EXPECT_EQ(serialize(MathNode("mi", "x")), "<mi>x</mi>"); }

TEST(Serialize, AttributesSorted) {
    EXPECT_EQ(serialize(parse_mathml("<mi b=\"2\" a=\"1\">x</mi>")),
              serialize(parse_mathml("<mi a=\"1\" b=\"2\">x</mi>")));
    EXPECT_EQ(serialize(parse_mathml("<mi b=\"2\" a=\"1\">x</mi>")), "<mi a=\"1\" b=\"2\">x</mi>");
}

TEST(Serialize, EscapesMarkup) {
    MathNode n("mo", "<&>");
    EXPECT_EQ(serialize(n), "<mo>&lt;&amp;&gt;</mo>");
    EXPECT_EQ(parse_mathml(serialize(n)), n);
}

TEST(Serialize, RoundTripProperty) {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 1000; ++i) {
        MathNode t = testkit::random_raw_tree(rng, 8);
        // serialize sorts attributes, so the first trip may reorder them
        MathNode once = parse_mathml(serialize(t));
        ASSERT_EQ(serialize(once), serialize(t));
        ASSERT_EQ(parse_mathml(serialize(once)), once) << serialize(t);
    }
}

TEST(ExtractFormulae, NoMath) {
    EXPECT_TRUE(extract_formulae("<html><body><p>plain</p></body></html>", HostFormat::xhtml).empty());
}

TEST(ExtractFormulae, TwoIslandsInOrder) {
    std::string doc = "<p>a <math><mi>x</mi></math> b <math><mn>2</mn></math></p>";
    auto fs = extract_formulae(doc, HostFormat::xhtml);
    ASSERT_EQ(fs.size(), 2u);
    EXPECT_EQ(fs[0].ordinal, 0u);
    EXPECT_EQ(fs[1].ordinal, 1u);
    EXPECT_LT(fs[0].doc_span.end, fs[1].doc_span.start);
    for (const auto& f : fs) {
        std::string_view slice = std::string_view(doc).substr(f.doc_span.start, f.doc_span.size());
        EXPECT_EQ(parse_mathml(slice), f.root);
    }
}

TEST(ExtractFormulae, SemanticsYieldsBothRepresentations) {
    std::string doc =
        "<p><math><semantics><mrow><mi>a</mi><mo>+</mo><mi>b</mi></mrow>"
        "<annotation-xml encoding=\"MathML-Content\"><apply><plus/><ci>a</ci><ci>b</ci></apply>"
        "</annotation-xml></semantics></math></p>";
    auto fs = extract_formulae(doc, HostFormat::xhtml);
    ASSERT_EQ(fs.size(), 2u);
    EXPECT_EQ(fs[0].kind, FormulaKind::presentation);
    EXPECT_EQ(fs[1].kind, FormulaKind::content);
    EXPECT_EQ(fs[0].doc_span, fs[1].doc_span);
    EXPECT_EQ(fs[0].ordinal, fs[1].ordinal);
    EXPECT_EQ(serialize(fs[0].root), "<math><mrow><mi>a</mi><mo>+</mo><mi>b</mi></mrow></math>");
    EXPECT_EQ(serialize(fs[1].root), "<math><apply><plus/><ci>a</ci><ci>b</ci></apply></math>");
}

TEST(ExtractFormulae, ContentKindDetected) {
    auto fs = extract_formulae("<math><apply><times/><cn>2</cn><ci>x</ci></apply></math>",
                               HostFormat::xhtml);
    ASSERT_EQ(fs.size(), 1u);
    EXPECT_EQ(fs[0].kind, FormulaKind::content);
}

TEST(ExtractFormulae, MalformedIslandReportsDocumentOffset) {
    std::string doc = "<p>text</p><math><mi>x</mo></math>";
    try {
        extract_formulae(doc, HostFormat::xhtml);
        FAIL();
    } catch (const MalformedXml& e) {
        EXPECT_GE(e.position(), doc.find("<math>"));
    }
}

TEST(ExtractFormulae, LenientHtmlHost) {
    std::string doc = "<HTML><p>unclosed <b>tags<br> <MATH><mi>y</mi></MATH> &nbsp; <p>more";
    auto fs = extract_formulae(doc, HostFormat::html);
    ASSERT_EQ(fs.size(), 1u);
    EXPECT_EQ(fs[0].root.children.at(0).text, "y");
}

TEST(ExtractFormulae, OrdinalsAndSpansProperty) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 200; ++i) {
        std::string doc = "<html><body>";
        std::size_t n = rng() % 5;
        for (std::size_t k = 0; k < n; ++k) doc += "<p>w " + serialize(testkit::random_raw_tree(rng, 4)) + "</p>";
        doc += "</body></html>";
        auto fs = extract_formulae(doc, HostFormat::xhtml);
        ASSERT_EQ(fs.size(), n);
        for (std::size_t k = 0; k < fs.size(); ++k) {
            EXPECT_EQ(fs[k].ordinal, k);
            EXPECT_LT(fs[k].doc_span.start, fs[k].doc_span.end);
            EXPECT_LE(fs[k].doc_span.end, doc.size());
            if (k) {
                EXPECT_GT(fs[k].doc_span.start, fs[k - 1].doc_span.start);
            }
            EXPECT_EQ(parse_mathml(std::string_view(doc).substr(fs[k].doc_span.start, fs[k].doc_span.size())),
                      fs[k].root);
        }
    }
}
