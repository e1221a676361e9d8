#include "millstone/queryapi/schema.hpp"

namespace millstone::queryapi {

using nlohmann::json;

const OutputField* ObjectType::field(std::string_view n) const noexcept {
  for (const auto& f : fields) {
    if (f.name == n) return &f;
  }
  return nullptr;
}

const InputField* InputType::field(std::string_view n) const noexcept {
  for (const auto& f : fields) {
    if (f.name == n) return &f;
  }
  return nullptr;
}

const InputField* OperationSpec::arg(std::string_view n) const noexcept {
  for (const auto& a : args) {
    if (a.name == n) return &a;
  }
  return nullptr;
}

namespace {

struct Catalog {
  ObjectType parts{"DocumentParts",
                   {{"title", "String"}, {"abstract", "String"}, {"claims", "String"}, {"description", "String"}}};
  ObjectType metadata{"Metadata", {}};
  ObjectType document;
  ObjectType encoded{"EncodedDocument", {{"id", "String"}, {"vector", "[Float!]"}}};
  ObjectType ref{"DocumentRef", {{"index", "String"}, {"id", "String!"}}};
  ObjectType matrix;

  std::vector<InputType> inputs;
  std::vector<OperationSpec> ops;

  Catalog() {
    document = {"Document",
                {{"id", "String!"},
                 {"index", "String!"},
                 {"score", "Float"},
                 {"documentParts", "DocumentParts", &parts},
                 {"metadata", "Metadata", &metadata, true},
                 {"vector", "[Float!]"}}};
    matrix = {"SimilarityMatrix",
              {{"metric", "Metric!"},
               {"sources", "[DocumentRef!]!", &ref},
               {"targets", "[DocumentRef!]!", &ref},
               {"values", "[[Float!]!]!"}}};

    auto t = [](std::string_view s) { return TypeRef::parse(s); };
    inputs = {
        {"String", {}, {}, true},
        {"Int", {}, {}, true},
        {"Float", {}, {}, true},
        {"Boolean", {}, {}, true},
        {"Metric", {}, {"cosine", "l1", "l2"}, false},
        {"DocumentKey", {{"index", t("String!")}, {"id", t("String!")}}, {}, false},
        {"DocumentPartInput", {{"key", t("String!")}, {"value", t("String!")}}, {}, false},
        {"EncodeObject", {{"id", t("String")}, {"parts", t("[DocumentPartInput!]!")}}, {}, false},
    };

    const json k10 = 10;
    const json cosine = "cosine";
    ops = {
        {"Document", "Fetch one stored document by index and id.",
         {{"index", t("String!")}, {"id", t("String!")}}, "Document", &document, false},
        {"Documents",
         "Fetch several stored documents, by index with ids or a keyword (exact id), or by (index, id) keys. "
         "Order follows the input; absent documents are null.",
         {{"index", t("String")}, {"keyword", t("String")}, {"ids", t("[String!]")}, {"keys", t("[DocumentKey!]")}},
         "[Document]", &document, true},
        {"searchDocuments", "Keyword search (BM25) over stored texts, optionally restricted to one index.",
         {{"index", t("String")}, {"keyword", t("String!")}, {"k", t("Int"), k10}}, "[Document!]!", &document, true},
        {"encodeDocument", "Encode one document's parts into a vector.",
         {{"data", t("EncodeObject!")}}, "[Float!]!", nullptr, false},
        {"encodeDocuments", "Encode several documents; failing items are null with an error entry.",
         {{"data", t("[EncodeObject!]!")}}, "[EncodedDocument]!", &encoded, true},
        {"similarityCalculation", "Similarity matrix between stored documents.",
         {{"sources", t("[DocumentKey!]!")}, {"targets", t("[DocumentKey!]!")}, {"metric", t("Metric"), cosine}},
         "SimilarityMatrix!", &matrix, false},
        {"encodeDocumentAndSimilarityCalculation",
         "Encode the given documents and return the all-pairs similarity matrix among them.",
         {{"data", t("[EncodeObject!]!")}, {"metric", t("Metric"), cosine}}, "SimilarityMatrix!", &matrix, false},
        {"SimilaritySearch",
         "Nearest stored neighbours of a stored document, in its own index (itself excluded) or another index.",
         {{"index", t("String!")}, {"id", t("String!")}, {"targetIndex", t("String")}, {"k", t("Int"), k10}},
         "[Document!]!", &document, true},
        {"embedDocumentAndSimilaritySearch", "Encode a document and return its nearest stored neighbours.",
         {{"data", t("EncodeObject!")}, {"index", t("String!")}, {"k", t("Int"), k10}}, "[Document!]!", &document,
         true},
    };
  }
};

const Catalog& catalog() {
  static const Catalog c;
  return c;
}

void validate_selection(const Field& field, const ObjectType& type) {
  for (const auto& sub : field.selection) {
    const OutputField* f = type.field(sub.name);
    if (!f) {
      throw QueryError(ErrorCode::UnknownField, sub.pos, "type " + type.name + " has no field '" + sub.name + "'");
    }
    if (!sub.args.empty()) {
      throw QueryError(ErrorCode::UnknownArgument, sub.args.front().pos,
                       "field '" + sub.name + "' takes no arguments");
    }
    if (!sub.has_selection) continue;
    if (f->open) {
      for (const auto& key : sub.selection) {
        if (key.has_selection || !key.args.empty()) {
          throw QueryError(ErrorCode::UnknownField, key.pos, "'" + sub.name + "." + key.name + "' is a string");
        }
      }
    } else if (f->object) {
      validate_selection(sub, *f->object);
    } else {
      throw QueryError(ErrorCode::UnknownField, sub.selection.front().pos,
                       "field '" + sub.name + "' of type " + f->type + " has no subfields");
    }
  }
}

json type_json(const TypeRef& t) { return t.to_string(); }

json object_json(const ObjectType& o) {
  json fields = json::array();
  for (const auto& f : o.fields) {
    json jf = {{"name", f.name}, {"type", f.type}};
    if (f.open) jf["open"] = true;
    fields.push_back(std::move(jf));
  }
  return {{"kind", "object"}, {"fields", std::move(fields)}};
}

}  // namespace

const std::vector<OperationSpec>& operations() { return catalog().ops; }

const OperationSpec* find_operation(std::string_view name) noexcept {
  for (const auto& op : catalog().ops) {
    if (op.name == name) return &op;
  }
  return nullptr;
}

const InputType* find_input_type(std::string_view name) noexcept {
  for (const auto& t : catalog().inputs) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

void validate_against_schema(const QueryAst& ast) {
  const Field& root = ast.root;
  const OperationSpec* op = find_operation(root.name);
  if (!op) throw QueryError(ErrorCode::UnknownOperation, root.pos, "unknown operation '" + root.name + "'");
  for (const auto& a : root.args) {
    if (!op->arg(a.name)) {
      throw QueryError(ErrorCode::UnknownArgument, a.pos, op->name + " has no argument '" + a.name + "'");
    }
  }
  if (!op->result) {
    if (root.has_selection) {
      throw QueryError(ErrorCode::UnknownField, root.selection.front().pos,
                       op->name + " returns " + op->result_type + " and takes no selection set");
    }
    return;
  }
  if (!root.has_selection) {
    throw QueryError(ErrorCode::SyntaxError, root.pos, op->name + " requires a selection set");
  }
  validate_selection(root, *op->result);
}

json schema_document() {
  const Catalog& c = catalog();
  json ops = json::array();
  for (const auto& op : c.ops) {
    json args = json::array();
    for (const auto& a : op.args) {
      json ja = {{"name", a.name}, {"type", type_json(a.type)}};
      if (a.default_value) ja["default"] = *a.default_value;
      args.push_back(std::move(ja));
    }
    ops.push_back({{"name", op.name}, {"description", op.description}, {"args", std::move(args)},
                   {"returns", op.result_type}});
  }
  json types = json::object();
  for (const ObjectType* o : {&c.document, &c.parts, &c.metadata, &c.encoded, &c.ref, &c.matrix}) {
    types[o->name] = object_json(*o);
  }
  for (const auto& in : c.inputs) {
    if (in.scalar) {
      types[in.name] = {{"kind", "scalar"}};
    } else if (!in.enum_values.empty()) {
      types[in.name] = {{"kind", "enum"}, {"values", in.enum_values}};
    } else {
      json fields = json::array();
      for (const auto& f : in.fields) fields.push_back({{"name", f.name}, {"type", type_json(f.type)}});
      types[in.name] = {{"kind", "input"}, {"fields", std::move(fields)}};
    }
  }
  types["Metadata"]["open"] = true;
  return {{"operations", std::move(ops)}, {"types", std::move(types)}};
}

}  // namespace millstone::queryapi
