// Hand-built fixture sets shared by the unit tests and the acceptance runner.
#pragma once

#include <string>
#include <utility>
#include <vector>

namespace mathfind::testkit {

/// Pairs of distinct MathML encodings of the same formula.
inline const std::vector<std::pair<std::string, std::string>>& equivalent_encodings() {
    static const std::vector<std::pair<std::string, std::string>> pairs = {
        // mfenced against explicit fences
        {"<math><mfenced><mi>x</mi><mi>y</mi></mfenced></math>",
         "<math><mrow><mo>(</mo><mrow><mi>x</mi><mo>,</mo><mi>y</mi></mrow><mo>)</mo></mrow></math>"},
        {"<math><mfenced open=\"[\" close=\"]\" separators=\";\"><mi>a</mi><mi>b</mi></mfenced></math>",
         "<math><mo>[</mo><mrow><mi>a</mi><mo>;</mo><mi>b</mi></mrow><mo>]</mo></math>"},
        {"<math><mfenced><mi>x</mi></mfenced></math>",
         "<math><mrow><mo>(</mo><mi>x</mi><mo>)</mo></mrow></math>"},
        // redundant rows
        {"<math><mrow><mrow><mrow><mi>a</mi><mo>+</mo><mi>b</mi></mrow></mrow></mrow></math>",
         "<math><mi>a</mi><mo>+</mo><mi>b</mi></math>"},
        {"<math><mrow><mrow><mi>a</mi></mrow></mrow></math>", "<math><mi>a</mi></math>"},
        // entities against literal glyphs
        {"<math><mi>&alpha;</mi><mo>&InvisibleTimes;</mo><mi>x</mi></math>",
         "<math><mi>α</mi><mo>*</mo><mi>x</mi></math>"},
        {"<math><mi>a</mi><mo>-</mo><mi>b</mi></math>",
         "<math><mi>a</mi><mo>&minus;</mo><mi>b</mi></math>"},
        {"<math><mi>a</mi><mo>&#x22C5;</mo><mi>b</mi></math>",
         "<math><mi>a</mi><mo>&times;</mo><mi>b</mi></math>"},
        {"<math><mrow><mi>a</mi><mo>&#x2062;</mo><mi>b</mi></mrow></math>",
         "<math><mrow><mi>a</mi><mo>*</mo><mi>b</mi></mrow></math>"},
        // implicit product
        {"<math><mi>a</mi><mi>b</mi></math>",
         "<math><mi>a</mi><mo>&InvisibleTimes;</mo><mi>b</mi></math>"},
        // msubsup against msup of msub, munderover likewise
        {"<math><msubsup><mi>x</mi><mi>i</mi><mn>2</mn></msubsup></math>",
         "<math><msup><msub><mi>x</mi><mi>i</mi></msub><mn>2</mn></msup></math>"},
        {"<math><munderover><mo>∑</mo><mi>i</mi><mi>n</mi></munderover></math>",
         "<math><mover><munder><mo>∑</mo><mi>i</mi></munder><mi>n</mi></mover></math>"},
        // presentational attributes and wrappers
        {"<math display=\"block\"><mi mathcolor=\"red\" class=\"v\">x</mi><mo stretchy=\"false\">=</mo>"
         "<mn mathvariant=\"bold\">1</mn></math>",
         "<math><mi>x</mi><mo>=</mo><mn>1</mn></math>"},
        {"<math><mstyle displaystyle=\"true\"><mfrac><mi>a</mi><mi>b</mi></mfrac></mstyle></math>",
         "<math><mfrac><mi>a</mi><mi>b</mi></mfrac></math>"},
        {"<math><mi>a</mi><mspace width=\"1em\"/><mo>+</mo><mi>b</mi></math>",
         "<math><mi>a</mi><mo>+</mo><mi>b</mi></math>"},
        {"<math><msqrt><mi>x</mi><mo>+</mo><mn>1</mn></msqrt></math>",
         "<math><msqrt><mrow><mi>x</mi><mo>+</mo><mn>1</mn></mrow></msqrt></math>"},
        // annotations and namespaces
        {"<math><semantics><mi>x</mi><annotation encoding=\"application/x-tex\">x</annotation>"
         "</semantics></math>",
         "<math><mi>x</mi></math>"},
        {"<m:math xmlns:m=\"http://www.w3.org/1998/Math/MathML\"><m:mi>x</m:mi><m:mo>+</m:mo><m:mn>1</m:mn></m:math>",
         "<math xmlns=\"http://www.w3.org/1998/Math/MathML\"><mi>x</mi><mo>+</mo><mn>1</mn></math>"},
        {"<math><apply id=\"e1\" xref=\"p1\"><plus/><ci>a</ci><ci>b</ci></apply></math>",
         "<math><apply><plus/><ci>a</ci><ci>b</ci></apply></math>"},
    };
    return pairs;
}

/// LaTeX fragments with a hand-written MathML encoding of the same formula.
inline const std::vector<std::pair<std::string, std::string>>& latex_mathml_pairs() {
    static const std::vector<std::pair<std::string, std::string>> pairs = {
        {"x^2", "<math><msup><mi>x</mi><mn>2</mn></msup></math>"},
        {"\\frac{a}{b}", "<math><mfrac><mi>a</mi><mi>b</mi></mfrac></math>"},
        {"b+a", "<math><mrow><mi>a</mi><mo>+</mo><mi>b</mi></mrow></math>"},
        {"a-b", "<math><mi>a</mi><mo>&minus;</mo><mi>b</mi></math>"},
        {"a \\cdot b", "<math><mi>a</mi><mo>&times;</mo><mi>b</mi></math>"},
        {"ab", "<math><mi>a</mi><mo>&InvisibleTimes;</mo><mi>b</mi></math>"},
        {"\\sqrt{x+1}", "<math><msqrt><mi>x</mi><mo>+</mo><mn>1</mn></msqrt></math>"},
        {"x_i^2", "<math><msubsup><mi>x</mi><mi>i</mi><mn>2</mn></msubsup></math>"},
        {"(a+b)^2",
         "<math><msup><mfenced><mrow><mi>a</mi><mo>+</mo><mi>b</mi></mrow></mfenced><mn>2</mn></msup></math>"},
        {"\\alpha + \\beta", "<math><mi>&alpha;</mi><mo>+</mo><mi>&beta;</mi></math>"},
        {"E = mc^2",
         "<math><mi>E</mi><mo>=</mo><mi>m</mi><mo>&InvisibleTimes;</mo><msup><mi>c</mi><mn>2</mn></msup></math>"},
        {"\\sin x", "<math><mi>sin</mi><mo>&ApplyFunction;</mo><mi>x</mi></math>"},
        {"\\sum_{i=1}^{n} i",
         "<math><munderover><mo>&sum;</mo><mrow><mi>i</mi><mo>=</mo><mn>1</mn></mrow><mi>n</mi></munderover>"
         "<mi>i</mi></math>"},
        {"x \\leq 2", "<math><mi>x</mi><mo>&le;</mo><mn>2</mn></math>"},
        {"2\\pi r", "<math><mn>2</mn><mi>&pi;</mi><mi>r</mi></math>"},
        {"\\left( x \\right)", "<math><mfenced><mi>x</mi></mfenced></math>"},
        {"a \\times (b + c)",
         "<math><mi>a</mi><mo>×</mo><mfenced><mrow><mi>b</mi><mo>+</mo><mi>c</mi></mrow></mfenced></math>"},
        {"x_{n+1}",
         "<math><msub><mi>x</mi><mrow><mi>n</mi><mo>+</mo><mn>1</mn></mrow></msub></math>"},
        {"\\int_0^1 f", "<math><msubsup><mo>&int;</mo><mn>0</mn><mn>1</mn></msubsup><mi>f</mi></math>"},
        {"\\frac{1}{2} \\pi r^2",
         "<math><mfrac><mn>1</mn><mn>2</mn></mfrac><mo>&#x2062;</mo><mi>π</mi><mo>&#x2062;</mo>"
         "<msup><mi>r</mi><mn>2</mn></msup></math>"},
    };
    return pairs;
}

}  // namespace mathfind::testkit
