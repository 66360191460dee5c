#pragma once

#include <string>
#include <string_view>

#include "mathfind/formula_pipeline.hpp"
#include "mathfind/index.hpp"
#include "mathfind/mathml.hpp"

namespace mathfind {

/// Copy of a host document in which tags, comments, `<math>` islands,
/// script/style bodies and entity references are replaced by spaces. Byte
/// offsets are preserved, so text token spans index the original.
std::string host_text_view(std::string_view body);

/// Content of `<title>`, else of the first `<h1>`, else `fallback`.
/// Whitespace is collapsed and the common entities are decoded.
std::string extract_title(std::string_view body, std::string_view fallback);

/// Parses, canonicalizes and tokenizes one host document. Throws MalformedXml
/// when a math island is not well-formed.
DocumentInput prepare_document(std::string path, std::string body, const PipelineConfig& config,
                               HostFormat format = HostFormat::xhtml);

}  // namespace mathfind
