#include <charconv>
#include <set>

#include "lexer.hpp"
#include "millstone/queryapi/schema.hpp"

namespace millstone::queryapi {

using detail::Token;
using detail::TokenKind;

const Argument* Field::arg(std::string_view n) const noexcept {
  for (const auto& a : args) {
    if (a.name == n) return &a;
  }
  return nullptr;
}

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : tokens_(detail::tokenize(text)) {}

  QueryAst document() {
    QueryAst ast;
    if (peek().kind == TokenKind::Name) {
      const Token& t = peek();
      if (t.text == "mutation" || t.text == "subscription") {
        throw QueryError(ErrorCode::SyntaxError, t.pos, "only query operations are supported");
      }
      if (t.text == "fragment") throw QueryError(ErrorCode::SyntaxError, t.pos, "fragments are not supported");
      if (t.text != "query") throw QueryError(ErrorCode::SyntaxError, t.pos, "expected '{' or 'query'");
      next();
      ast.explicit_query = true;
      if (peek().kind == TokenKind::Name) ast.name = next().text;
      if (is_punct("(")) {
        next();
        while (!is_punct(")")) ast.variables.push_back(variable_decl(ast.variables));
        next();
      }
    }
    const Token& open = expect_punct("{");
    if (is_punct("}")) throw QueryError(ErrorCode::SyntaxError, peek().pos, "expected an operation");
    ast.root = field();
    if (!is_punct("}")) {
      throw QueryError(ErrorCode::SyntaxError, peek().pos, "exactly one operation per request is supported");
    }
    next();
    (void)open;
    if (peek().kind != TokenKind::End) {
      throw QueryError(ErrorCode::SyntaxError, peek().pos, "unexpected '" + peek().text + "' after the operation");
    }
    return ast;
  }

 private:
  const Token& peek() const { return tokens_[i_]; }
  const Token& next() {
    const Token& t = tokens_[i_];
    if (t.kind != TokenKind::End) ++i_;
    return t;
  }
  bool is_punct(std::string_view p) const { return peek().kind == TokenKind::Punct && peek().text == p; }

  [[noreturn]] void unexpected(std::string_view wanted) const {
    const Token& t = peek();
    const std::string got = t.kind == TokenKind::End ? "end of input" : "'" + t.text + "'";
    throw QueryError(ErrorCode::SyntaxError, t.pos, "expected " + std::string(wanted) + ", found " + got);
  }

  const Token& expect_punct(std::string_view p) {
    if (!is_punct(p)) unexpected("'" + std::string(p) + "'");
    return next();
  }

  const Token& expect_name() {
    if (peek().kind != TokenKind::Name) unexpected("a name");
    return next();
  }

  VariableDecl variable_decl(const std::vector<VariableDecl>& seen) {
    VariableDecl d;
    d.pos = expect_punct("$").pos;
    d.name = expect_name().text;
    for (const auto& s : seen) {
      if (s.name == d.name) throw QueryError(ErrorCode::SyntaxError, d.pos, "variable $" + d.name + " declared twice");
    }
    expect_punct(":");
    d.type = type_ref();
    if (is_punct("=")) {
      next();
      d.default_value = value(true);
    }
    return d;
  }

  TypeRef type_ref() {
    TypeRef t;
    if (is_punct("[")) {
      next();
      t.item = std::make_shared<TypeRef>(type_ref());
      expect_punct("]");
    } else {
      t.name = expect_name().text;
    }
    if (is_punct("!")) {
      next();
      t.non_null = true;
    }
    return t;
  }

  Field field() {
    Field f;
    const Token& name = expect_name();
    f.name = name.text;
    f.pos = name.pos;
    if (is_punct(":")) throw QueryError(ErrorCode::SyntaxError, peek().pos, "aliases are not supported");
    if (is_punct("(")) {
      next();
      if (is_punct(")")) throw QueryError(ErrorCode::SyntaxError, peek().pos, "empty argument list");
      while (!is_punct(")")) {
        Argument a;
        const Token& an = expect_name();
        a.name = an.text;
        a.pos = an.pos;
        if (f.arg(a.name)) throw QueryError(ErrorCode::SyntaxError, a.pos, "argument '" + a.name + "' given twice");
        expect_punct(":");
        a.value = value(false);
        f.args.push_back(std::move(a));
      }
      next();
    }
    if (is_punct("{")) {
      next();
      f.has_selection = true;
      if (is_punct("}")) throw QueryError(ErrorCode::SyntaxError, peek().pos, "empty selection set");
      std::set<std::string> names;
      while (!is_punct("}")) {
        auto sub = field();
        if (!names.insert(sub.name).second) {
          throw QueryError(ErrorCode::SyntaxError, sub.pos, "field '" + sub.name + "' selected twice");
        }
        f.selection.push_back(std::move(sub));
      }
      next();
    }
    return f;
  }

  Value value(bool constant) {
    Value v;
    const Token& t = peek();
    v.pos = t.pos;
    switch (t.kind) {
      case TokenKind::String:
        v.kind = Value::Kind::String;
        v.text = next().text;
        return v;
      case TokenKind::Int: {
        v.kind = Value::Kind::Int;
        const std::string& s = next().text;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v.integer);
        if (ec != std::errc() || ptr != s.data() + s.size()) {
          throw QueryError(ErrorCode::SyntaxError, v.pos, "integer out of range");
        }
        return v;
      }
      case TokenKind::Float:
        v.kind = Value::Kind::Float;
        v.text = next().text;
        v.number = std::stod(v.text);
        return v;
      case TokenKind::Name:
        next();
        if (t.text == "true" || t.text == "false") {
          v.kind = Value::Kind::Boolean;
          v.boolean = t.text == "true";
        } else if (t.text == "null") {
          v.kind = Value::Kind::Null;
        } else {
          v.kind = Value::Kind::Enum;
          v.text = t.text;
        }
        return v;
      case TokenKind::Punct:
        if (t.text == "$") {
          if (constant) throw QueryError(ErrorCode::SyntaxError, t.pos, "variables are not allowed here");
          next();
          v.kind = Value::Kind::Variable;
          v.text = expect_name().text;
          return v;
        }
        if (t.text == "[") {
          next();
          v.kind = Value::Kind::List;
          while (!is_punct("]")) v.items.push_back(value(constant));
          next();
          return v;
        }
        if (t.text == "{") {
          next();
          v.kind = Value::Kind::Object;
          while (!is_punct("}")) {
            const Token& k = expect_name();
            for (const auto& [name, _] : v.fields) {
              if (name == k.text) throw QueryError(ErrorCode::SyntaxError, k.pos, "field '" + k.text + "' given twice");
            }
            std::string key = k.text;
            expect_punct(":");
            v.fields.emplace_back(std::move(key), value(constant));
          }
          next();
          return v;
        }
        break;
      case TokenKind::End:
        break;
    }
    unexpected("a value");
  }

  std::vector<Token> tokens_;
  std::size_t i_ = 0;
};

void quote(std::string& out, const std::string& s) {
  static constexpr char hex[] = "0123456789abcdef";
  out += '"';
  for (const char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          out += "\\u00";
          out += hex[(c >> 4) & 0xf];
          out += hex[c & 0xf];
        } else {
          out += c;
        }
    }
  }
  out += '"';
}

void print_value_to(std::string& out, const Value& v) {
  switch (v.kind) {
    case Value::Kind::Null: out += "null"; break;
    case Value::Kind::Boolean: out += v.boolean ? "true" : "false"; break;
    case Value::Kind::Int: out += std::to_string(v.integer); break;
    case Value::Kind::Float: out += v.text; break;
    case Value::Kind::String: quote(out, v.text); break;
    case Value::Kind::Enum: out += v.text; break;
    case Value::Kind::Variable: out += "$" + v.text; break;
    case Value::Kind::List:
      out += '[';
      for (std::size_t i = 0; i < v.items.size(); ++i) {
        if (i) out += ", ";
        print_value_to(out, v.items[i]);
      }
      out += ']';
      break;
    case Value::Kind::Object:
      out += '{';
      for (std::size_t i = 0; i < v.fields.size(); ++i) {
        out += i ? ", " : "";
        out += v.fields[i].first + ": ";
        print_value_to(out, v.fields[i].second);
      }
      out += '}';
      break;
  }
}

void print_field(std::string& out, const Field& f, int depth) {
  out.append(static_cast<std::size_t>(depth) * 2, ' ');
  out += f.name;
  if (!f.args.empty()) {
    out += '(';
    for (std::size_t i = 0; i < f.args.size(); ++i) {
      if (i) out += ", ";
      out += f.args[i].name + ": ";
      print_value_to(out, f.args[i].value);
    }
    out += ')';
  }
  if (f.has_selection) {
    out += " {\n";
    for (const auto& s : f.selection) print_field(out, s, depth + 1);
    out.append(static_cast<std::size_t>(depth) * 2, ' ');
    out += '}';
  }
  out += '\n';
}

}  // namespace

std::string TypeRef::to_string() const {
  std::string s = is_list() ? "[" + item->to_string() + "]" : name;
  if (non_null) s += '!';
  return s;
}

TypeRef TypeRef::parse(std::string_view text) {
  // Reuse the document grammar: "query($t: <type>) { x }".
  const std::string wrapped = "query($t: " + std::string(text) + ") { x }";
  auto ast = Parser(wrapped).document();
  return ast.variables.at(0).type;
}

QueryAst parse_query_syntax(std::string_view text) { return Parser(text).document(); }

QueryAst parse_query(std::string_view text) {
  auto ast = parse_query_syntax(text);
  validate_against_schema(ast);
  return ast;
}

std::string print_value(const Value& v) {
  std::string out;
  print_value_to(out, v);
  return out;
}

std::string print_query(const QueryAst& ast) {
  std::string out;
  if (ast.explicit_query || ast.name || !ast.variables.empty()) {
    out += "query";
    if (ast.name) out += " " + *ast.name;
    if (!ast.variables.empty()) {
      out += '(';
      for (std::size_t i = 0; i < ast.variables.size(); ++i) {
        const auto& d = ast.variables[i];
        if (i) out += ", ";
        out += "$" + d.name + ": " + d.type.to_string();
        if (d.default_value) out += " = " + print_value(*d.default_value);
      }
      out += ')';
    }
    out += ' ';
  }
  out += "{\n";
  print_field(out, ast.root, 1);
  out += "}\n";
  return out;
}

}  // namespace millstone::queryapi
