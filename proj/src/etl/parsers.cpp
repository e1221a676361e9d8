#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <json.hpp>

#include "millstone/etl.hpp"

namespace millstone::etl {

using nlohmann::json;
namespace pt = boost::property_tree;

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::string scalar_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

std::string join_authors(const json& authors) {
  if (!authors.is_array()) return scalar_text(authors);
  std::string out;
  for (const auto& a : authors) {
    std::string name;
    if (a.is_string()) {
      name = a.get<std::string>();
    } else if (a.is_object() && a.contains("name") && a["name"].is_string()) {
      name = a["name"].get<std::string>();
    } else {
      name = a.dump();
    }
    if (!out.empty()) out += "; ";
    out += name;
  }
  return out;
}

// All text below a node, children in document order, separated by newlines.
std::string collect_text(const pt::ptree& node) {
  std::string out = trim(node.data());
  for (const auto& [name, child] : node) {
    if (name == "<xmlattr>" || name == "<xmlcomment>") continue;
    auto text = collect_text(child);
    if (text.empty()) continue;
    if (!out.empty()) out += '\n';
    out += text;
  }
  return out;
}

std::string join_children(const pt::ptree& node, const std::string& child_name) {
  std::string out;
  for (const auto& [name, child] : node) {
    if (name != child_name) continue;
    auto text = trim(child.data());
    if (text.empty()) continue;
    if (!out.empty()) out += "; ";
    out += text;
  }
  return out;
}

}  // namespace

ParseResult parse_publication_record(std::string_view line, const CorpusId& corpus) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return Rejection{"malformed_json", "line is not a JSON object"};

  Document doc;
  doc.corpus = corpus;
  auto id = j.find("id");
  if (id == j.end() || !(id->is_string() || id->is_number_integer()) ||
      (id->is_string() && trim(id->get<std::string>()).empty())) {
    return Rejection{"no_id", "record has no usable id"};
  }
  doc.id = id->is_string() ? trim(id->get<std::string>()) : id->dump();

  for (const auto& [key, value] : j.items()) {
    if (key == "id" || value.is_null()) continue;
    if (key == "title" || key == "abstract") {
      if (!value.is_string()) return Rejection{"malformed_json", "'" + key + "' must be a string"};
      auto text = trim(value.get<std::string>());
      if (!text.empty()) {
        doc.parts.push_back({key == "title" ? PartKey::Title : PartKey::Abstract, std::move(text)});
      }
    } else if (key == "authors") {
      doc.metadata["authors"] = join_authors(value);
    } else {
      doc.metadata[key] = scalar_text(value);
    }
  }
  if (doc.parts.empty()) return Rejection{"no_text", "record '" + doc.id + "' has neither title nor abstract"};
  // Title first regardless of field order in the source line.
  std::stable_sort(doc.parts.begin(), doc.parts.end(),
                   [](const DocumentPart& a, const DocumentPart& b) { return a.key < b.key; });
  return doc;
}

ParseResult parse_patent_document(std::string_view xml, const CorpusId& corpus) {
  if (!corpus.is_patent_office()) {
    return Rejection{"invalid_document", "corpus '" + corpus.name() + "' is not a patent office"};
  }
  pt::ptree tree;
  try {
    std::istringstream in{std::string(xml)};
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    return Rejection{"malformed_xml", e.what()};
  }
  const auto root = tree.get_child_optional("patent-document");
  if (!root) return Rejection{"malformed_xml", "missing <patent-document> root"};

  Document doc;
  doc.corpus = corpus;
  doc.id = trim(root->get<std::string>("publication-number", ""));
  if (doc.id.empty()) return Rejection{"no_id", "missing <publication-number>"};
  const bool bibliographic_only = root->get<std::string>("<xmlattr>.type", "") == "docdb";

  for (PartKey key : {PartKey::Title, PartKey::Abstract, PartKey::Claims, PartKey::Description}) {
    if (auto node = root->get_child_optional(std::string(to_string(key)))) {
      auto text = collect_text(*node);
      if (!text.empty()) doc.parts.push_back({key, std::move(text)});
    }
  }
  if (doc.parts.empty()) return Rejection{"no_text", "patent '" + doc.id + "' has no text parts"};

  for (const char* field : {"country", "publication-date", "filing-date", "kind", "language"}) {
    auto text = trim(root->get<std::string>(field, ""));
    if (!text.empty()) doc.metadata[field] = std::move(text);
  }
  const std::pair<const char*, const char*> lists[] = {
      {"classifications", "classification"}, {"applicants", "applicant"}, {"inventors", "inventor"}};
  for (const auto& [parent, child] : lists) {
    if (auto node = root->get_child_optional(parent)) {
      auto joined = join_children(*node, child);
      if (!joined.empty()) doc.metadata[parent] = std::move(joined);
    }
  }
  if (bibliographic_only) doc.metadata["record_type"] = "docdb";
  return doc;
}

}  // namespace millstone::etl
