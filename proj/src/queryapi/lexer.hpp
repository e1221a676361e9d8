#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "millstone/queryapi/ast.hpp"

namespace millstone::queryapi::detail {

enum class TokenKind { Name, String, Int, Float, Punct, End };

struct Token {
  TokenKind kind;
  std::string text;  // decoded for strings, the character for punctuators
  Position pos;
};

// Throws QueryError(SyntaxError).
std::vector<Token> tokenize(std::string_view source);

}  // namespace millstone::queryapi::detail
