#pragma once

// Canonical JSON encoding of documents:
//   {"id": "...", "index": "<corpus>_cos", "documentParts": [{"key": "...", "value": "..."}],
//    "metadata": {...}, "vector": [...]}
// "vector" is omitted when the document has no embedding.

#include <json.hpp>

#include "millstone/model.hpp"

namespace millstone {

nlohmann::json to_json(const Document& doc, bool include_vector = true);
// Throws Error(InvalidArgument) when required fields are missing or mistyped.
Document document_from_json(const nlohmann::json& j);

std::string serialize_document(const Document& doc);
Document deserialize_document(std::string_view text);

}  // namespace millstone
