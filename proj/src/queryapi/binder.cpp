#include <algorithm>
#include <map>
#include <set>

#include "millstone/queryapi/executor.hpp"

namespace millstone::queryapi {

using nlohmann::json;

namespace {

std::string kind_name(const json& v) {
  switch (v.type()) {
    case json::value_t::null: return "null";
    case json::value_t::boolean: return "Boolean";
    case json::value_t::number_integer:
    case json::value_t::number_unsigned: return "Int";
    case json::value_t::number_float: return "Float";
    case json::value_t::string: return "String";
    case json::value_t::array: return "list";
    case json::value_t::object: return "object";
    default: return "value";
  }
}

[[noreturn]] void mismatch(const std::string& where, const TypeRef& t, const json& v) {
  throw Error(ErrorCode::TypeMismatch,
              where + ": expected " + t.to_string() + ", got " + kind_name(v));
}

// Input coercion: validates `v` against `t` and returns the coerced value
// (a single value where a list is expected becomes a one-element list).
json coerce(const json& v, const TypeRef& t, const std::string& where) {
  if (v.is_null()) {
    if (t.non_null) mismatch(where, t, v);
    return v;
  }
  if (t.is_list()) {
    json out = json::array();
    if (v.is_array()) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(coerce(v[i], *t.item, where + "[" + std::to_string(i) + "]"));
      }
    } else {
      out.push_back(coerce(v, *t.item, where));
    }
    return out;
  }
  const InputType* type = find_input_type(t.name);
  if (!type) throw Error(ErrorCode::TypeMismatch, where + ": unknown type " + t.name);
  if (type->scalar) {
    const bool ok = (t.name == "String" && v.is_string()) || (t.name == "Int" && v.is_number_integer()) ||
                    (t.name == "Float" && v.is_number()) || (t.name == "Boolean" && v.is_boolean());
    if (!ok) mismatch(where, t, v);
    if (t.name == "Float") return v.get<double>();
    return v;
  }
  if (!type->enum_values.empty()) {
    // Membership is checked by the operation so that it can report the
    // specific error (UnknownMetric).
    if (!v.is_string()) mismatch(where, t, v);
    return v;
  }
  if (!v.is_object()) mismatch(where, t, v);
  json out = json::object();
  for (const auto& [key, _] : v.items()) {
    if (!type->field(key)) throw Error(ErrorCode::TypeMismatch, where + ": " + t.name + " has no field '" + key + "'");
  }
  for (const auto& f : type->fields) {
    auto it = v.find(f.name);
    if (it == v.end()) {
      if (f.default_value) {
        out[f.name] = *f.default_value;
      } else if (f.type.non_null) {
        throw Error(ErrorCode::TypeMismatch, where + ": missing required field '" + f.name + "'");
      }
      continue;
    }
    out[f.name] = coerce(*it, f.type, where + "." + f.name);
  }
  return out;
}

// Literal values with variables substituted. Returns nullopt for a
// reference to a variable that was not supplied and has no default.
std::optional<json> materialize(const Value& v, const std::map<std::string, json>& vars,
                                std::set<std::string>& used) {
  switch (v.kind) {
    case Value::Kind::Null: return json(nullptr);
    case Value::Kind::Boolean: return json(v.boolean);
    case Value::Kind::Int: return json(v.integer);
    case Value::Kind::Float: return json(v.number);
    case Value::Kind::String:
    case Value::Kind::Enum: return json(v.text);
    case Value::Kind::Variable: {
      used.insert(v.text);
      auto it = vars.find(v.text);
      if (it == vars.end()) return std::nullopt;
      return it->second;
    }
    case Value::Kind::List: {
      json out = json::array();
      for (const auto& item : v.items) out.push_back(materialize(item, vars, used).value_or(nullptr));
      return out;
    }
    case Value::Kind::Object: {
      json out = json::object();
      for (const auto& [key, item] : v.fields) {
        if (auto m = materialize(item, vars, used)) out[key] = std::move(*m);
      }
      return out;
    }
  }
  return std::nullopt;
}

void collect_references(const Value& v, std::vector<const Value*>& out) {
  if (v.kind == Value::Kind::Variable) out.push_back(&v);
  for (const auto& item : v.items) collect_references(item, out);
  for (const auto& [_, item] : v.fields) collect_references(item, out);
}

}  // namespace

BoundRequest bind_variables(const QueryAst& ast, const json& variables) {
  if (!variables.is_null() && !variables.is_object()) {
    throw Error(ErrorCode::TypeMismatch, "variables must be a JSON object");
  }
  const OperationSpec* op = find_operation(ast.operation());
  if (!op) throw Error(ErrorCode::UnknownOperation, "unknown operation '" + ast.operation() + "'");

  BoundRequest bound;
  bound.op = op;
  bound.root = ast.root;

  std::map<std::string, json> resolved;
  for (const auto& decl : ast.variables) {
    const std::string where = "variable $" + decl.name;
    const json* given = nullptr;
    if (variables.is_object()) {
      if (auto it = variables.find(decl.name); it != variables.end()) given = &*it;
    }
    if (given) {
      resolved[decl.name] = coerce(*given, decl.type, where);
    } else if (decl.default_value) {
      std::set<std::string> ignored;
      resolved[decl.name] = coerce(*materialize(*decl.default_value, {}, ignored), decl.type, where);
    } else if (decl.type.non_null) {
      throw Error(ErrorCode::MissingVariable, "required variable $" + decl.name + " of type " +
                                                  decl.type.to_string() + " was not provided");
    }
  }

  std::vector<const Value*> refs;
  for (const auto& a : ast.root.args) collect_references(a.value, refs);
  for (const Value* r : refs) {
    const bool declared = std::any_of(ast.variables.begin(), ast.variables.end(),
                                      [&](const VariableDecl& d) { return d.name == r->text; });
    if (!declared) {
      throw Error(ErrorCode::MissingVariable, "variable $" + r->text + " is used but not declared (line " +
                                                  std::to_string(r->pos.line) + ", column " +
                                                  std::to_string(r->pos.column) + ")");
    }
  }

  std::set<std::string> used;
  bound.args = json::object();
  for (const auto& a : ast.root.args) {
    const InputField* spec = op->arg(a.name);
    if (!spec) throw Error(ErrorCode::UnknownArgument, op->name + " has no argument '" + a.name + "'");
    auto value = materialize(a.value, resolved, used);
    if (!value) continue;  // omitted nullable variable: argument is absent
    bound.args[a.name] = coerce(*value, spec->type, "argument '" + a.name + "'");
  }
  for (const auto& spec : op->args) {
    if (bound.args.contains(spec.name)) continue;
    if (spec.default_value) {
      bound.args[spec.name] = *spec.default_value;
    } else if (spec.type.non_null) {
      throw Error(ErrorCode::MissingArgument,
                  op->name + " requires argument '" + spec.name + "' of type " + spec.type.to_string());
    }
  }

  for (const auto& decl : ast.variables) {
    if (!used.contains(decl.name)) bound.warnings.push_back("variable $" + decl.name + " is declared but not used");
  }
  if (variables.is_object()) {
    for (const auto& [key, _] : variables.items()) {
      const bool declared = std::any_of(ast.variables.begin(), ast.variables.end(),
                                        [&](const VariableDecl& d) { return d.name == key; });
      if (!declared) bound.warnings.push_back("variable '" + key + "' is not declared and was ignored");
    }
  }
  return bound;
}

}  // namespace millstone::queryapi
