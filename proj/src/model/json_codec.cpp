#include "millstone/json_codec.hpp"

namespace millstone {

using nlohmann::json;

json to_json(const Document& doc, bool include_vector) {
  json parts = json::array();
  for (const auto& p : doc.parts) {
    parts.push_back({{"key", to_string(p.key)}, {"value", p.value}});
  }
  json j = {
      {"id", doc.id},
      {"index", doc.corpus.index_name()},
      {"documentParts", std::move(parts)},
      {"metadata", doc.metadata},
  };
  if (include_vector && doc.embedding) j["vector"] = doc.embedding->components();
  return j;
}

namespace {

[[noreturn]] void bad(const std::string& what) {
  throw Error(ErrorCode::InvalidArgument, "document json: " + what);
}

const json& require(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) bad(std::string("missing '") + key + "'");
  return *it;
}

}  // namespace

Document document_from_json(const json& j) {
  if (!j.is_object()) bad("expected object");
  Document doc;
  const auto& id = require(j, "id");
  if (!id.is_string()) bad("'id' must be a string");
  doc.id = id.get<std::string>();

  const auto& index = require(j, "index");
  if (!index.is_string()) bad("'index' must be a string");
  try {
    doc.corpus = CorpusId::from_index_name(index.get<std::string>());
  } catch (const Error& e) {
    bad(e.what());
  }

  const auto& parts = require(j, "documentParts");
  if (!parts.is_array()) bad("'documentParts' must be an array");
  for (const auto& p : parts) {
    if (!p.is_object() || !p.contains("key") || !p.contains("value") || !p["key"].is_string() ||
        !p["value"].is_string()) {
      bad("malformed document part");
    }
    auto key = parse_part_key(p["key"].get<std::string>());
    if (!key) bad("unknown part key '" + p["key"].get<std::string>() + "'");
    doc.parts.push_back({*key, p["value"].get<std::string>()});
  }

  if (auto it = j.find("metadata"); it != j.end()) {
    if (!it->is_object()) bad("'metadata' must be an object");
    for (const auto& [k, v] : it->items()) {
      if (!v.is_string()) bad("metadata values must be strings");
      doc.metadata.emplace(k, v.get<std::string>());
    }
  }

  if (auto it = j.find("vector"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) bad("'vector' must be an array");
    std::vector<double> values;
    values.reserve(it->size());
    for (const auto& v : *it) {
      if (!v.is_number()) bad("'vector' entries must be numbers");
      values.push_back(v.get<double>());
    }
    try {
      doc.embedding = Embedding(std::move(values));
    } catch (const Error& e) {
      bad(e.what());
    }
  }
  return doc;
}

std::string serialize_document(const Document& doc) { return to_json(doc).dump(); }

Document deserialize_document(std::string_view text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) bad("not valid JSON");
  return document_from_json(j);
}

}  // namespace millstone
