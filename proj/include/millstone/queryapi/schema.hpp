#pragma once

// Static schema of the nine operations: arguments, input types and response
// object shapes. The parser validates selections against it, the binder
// checks argument values, and GET /api/schema serves its JSON rendering.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "millstone/queryapi/ast.hpp"

namespace millstone::queryapi {

struct ObjectType;

struct OutputField {
  std::string name;
  std::string type;                  // display form, e.g. "[Float!]"
  const ObjectType* object = nullptr;  // set for composite fields
  bool open = false;                 // arbitrary keys may be selected (metadata)
};

struct ObjectType {
  std::string name;
  std::vector<OutputField> fields;

  const OutputField* field(std::string_view n) const noexcept;
};

struct InputField {
  std::string name;
  TypeRef type;
  std::optional<nlohmann::json> default_value;
};

struct InputType {
  std::string name;
  std::vector<InputField> fields;  // empty for scalars and enums
  std::vector<std::string> enum_values;
  bool scalar = false;

  const InputField* field(std::string_view n) const noexcept;
};

struct OperationSpec {
  std::string name;
  std::string description;
  std::vector<InputField> args;
  std::string result_type;             // display form
  const ObjectType* result = nullptr;  // null for scalar results
  bool list_result = false;

  const InputField* arg(std::string_view n) const noexcept;
};

const std::vector<OperationSpec>& operations();
const OperationSpec* find_operation(std::string_view name) noexcept;
const InputType* find_input_type(std::string_view name) noexcept;

// Throws QueryError(UnknownOperation / UnknownField / UnknownArgument).
void validate_against_schema(const QueryAst& ast);

nlohmann::json schema_document();

}  // namespace millstone::queryapi
