#pragma once

// Syntax tree for the supported query-language subset:
//
//   document   := [ "query" [Name] [ "(" varDecl* ")" ] ] "{" field "}"
//   varDecl    := "$" Name ":" type [ "=" value ]
//   type       := Name | "[" type "]"  followed by optional "!"
//   field      := Name [ "(" (Name ":" value)* ")" ] [ "{" field+ "}" ]
//   value      := "$" Name | String | Int | Float | true | false | null | Name (enum)
//               | "[" value* "]" | "{" (Name ":" value)* "}"
//
// Commas are insignificant and "#" starts a comment, as in GraphQL. No
// fragments, directives, aliases, mutations or subscriptions.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "millstone/error.hpp"

namespace millstone::queryapi {

struct Position {
  int line = 1;
  int column = 1;

  bool operator==(const Position&) const = default;
};

struct Value {
  enum class Kind { Null, Boolean, Int, Float, String, Enum, List, Object, Variable };

  Kind kind = Kind::Null;
  bool boolean = false;
  std::int64_t integer = 0;
  double number = 0.0;
  std::string text;  // String, Enum, Variable (name without '$'), Float (source spelling)
  std::vector<Value> items;
  std::vector<std::pair<std::string, Value>> fields;
  Position pos;
};

struct TypeRef {
  std::string name;               // set for named types
  std::shared_ptr<TypeRef> item;  // set for list types
  bool non_null = false;

  bool is_list() const noexcept { return item != nullptr; }
  std::string to_string() const;
  // Parses "String!", "[DocumentKey!]!" ... Throws Error(SyntaxError).
  static TypeRef parse(std::string_view text);
};

struct VariableDecl {
  std::string name;
  TypeRef type;
  std::optional<Value> default_value;
  Position pos;
};

struct Argument {
  std::string name;
  Value value;
  Position pos;
};

struct Field {
  std::string name;
  std::vector<Argument> args;
  std::vector<Field> selection;
  bool has_selection = false;
  Position pos;

  const Argument* arg(std::string_view n) const noexcept;
};

struct QueryAst {
  bool explicit_query = false;  // written with the "query" keyword
  std::optional<std::string> name;
  std::vector<VariableDecl> variables;
  Field root;  // the single operation call

  const std::string& operation() const noexcept { return root.name; }
};

// Error with a source position, code SyntaxError / UnknownOperation / UnknownField.
class QueryError : public Error {
 public:
  QueryError(ErrorCode code, Position pos, const std::string& message)
      : Error(code, message + " at line " + std::to_string(pos.line) + ", column " + std::to_string(pos.column)),
        pos_(pos) {}

  Position position() const noexcept { return pos_; }

 private:
  Position pos_;
};

// Parses and validates operation, argument names and selection fields
// against the static schema. Throws QueryError.
QueryAst parse_query(std::string_view text);

// Syntax only, no schema validation. Throws QueryError(SyntaxError).
QueryAst parse_query_syntax(std::string_view text);

// Canonical two-space-indented rendering; parse_query(print_query(a)) prints
// identically.
std::string print_query(const QueryAst& ast);
std::string print_value(const Value& v);

}  // namespace millstone::queryapi
