#pragma once

// Binding of request variables and execution of the nine operations against
// an Engine, with field projection of the results.

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "millstone/engine.hpp"
#include "millstone/queryapi/ast.hpp"
#include "millstone/queryapi/schema.hpp"

namespace millstone::queryapi {

struct BoundRequest {
  const OperationSpec* op = nullptr;
  Field root;            // selection set to project with
  nlohmann::json args;   // object; every argument resolved, defaults applied
  std::vector<std::string> warnings;
};

// Substitutes variables and checks argument values against the schema.
// `variables` may be null or an object. Throws Error(MissingVariable,
// TypeMismatch, MissingArgument).
BoundRequest bind_variables(const QueryAst& ast, const nlohmann::json& variables);

struct ApiError {
  ErrorCode code;
  std::string message;
  nlohmann::json path = nlohmann::json::array();
  std::optional<Position> location;

  nlohmann::json to_json() const;
  static ApiError from(const Error& e, nlohmann::json path = nlohmann::json::array());
};

struct ExecutionResult {
  nlohmann::json data;  // value of the root field, null on failure
  std::vector<ApiError> errors;
  std::vector<std::string> warnings;

  // {"data":{<op>:...}} plus "errors" when any; {"errors":[...]} alone when
  // the operation failed as a whole.
  nlohmann::json envelope(const std::string& operation) const;
};

// Never throws Error: failures are reported in the result.
ExecutionResult execute(const BoundRequest& request, const Engine& engine);

// Keeps exactly the selected fields of `value` (object, list of objects or
// null). Missing fields become null.
nlohmann::json project(const nlohmann::json& value, const Field& field, const ObjectType* type);

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

// Handles a POST /api body: {"query": "...", "variables": {...} | [{...}, ...]}.
// A variables array runs the query once per element and answers with an
// array of envelopes. Status 400 for unparseable requests and bind errors,
// 200 otherwise.
ApiResponse handle_api_request(std::string_view body, const Engine& engine);

}  // namespace millstone::queryapi
