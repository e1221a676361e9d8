#include "lexer.hpp"

namespace millstone::queryapi::detail {

namespace {

bool name_start(char c) noexcept { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
bool name_char(char c) noexcept { return name_start(c) || (c >= '0' && c <= '9'); }
bool digit(char c) noexcept { return c >= '0' && c <= '9'; }

void append_utf8(std::string& out, unsigned cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else {
    out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  }
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_ignored();
      const Position at = here();
      if (pos_ >= src_.size()) {
        out.push_back({TokenKind::End, "", at});
        return out;
      }
      const char c = src_[pos_];
      if (std::string_view("{}()[]:!$=").find(c) != std::string_view::npos) {
        advance();
        out.push_back({TokenKind::Punct, std::string(1, c), at});
      } else if (name_start(c)) {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && name_char(src_[pos_])) advance();
        out.push_back({TokenKind::Name, std::string(src_.substr(start, pos_ - start)), at});
      } else if (c == '-' || digit(c)) {
        out.push_back(number(at));
      } else if (c == '"') {
        out.push_back(string(at));
      } else if (c == '.') {
        throw QueryError(ErrorCode::SyntaxError, at, "fragments are not supported");
      } else {
        throw QueryError(ErrorCode::SyntaxError, at, std::string("unexpected character '") + c + "'");
      }
    }
  }

 private:
  Position here() const noexcept { return {line_, col_}; }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_ignored() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == ',') {
        advance();
      } else if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (static_cast<unsigned char>(c) == 0xef && src_.substr(pos_, 3) == "\xef\xbb\xbf") {
        pos_ += 3;  // byte order mark
      } else {
        break;
      }
    }
  }

  Token number(Position at) {
    const std::size_t start = pos_;
    if (src_[pos_] == '-') advance();
    if (pos_ >= src_.size() || !digit(src_[pos_])) {
      throw QueryError(ErrorCode::SyntaxError, at, "malformed number");
    }
    if (src_[pos_] == '0' && pos_ + 1 < src_.size() && digit(src_[pos_ + 1])) {
      throw QueryError(ErrorCode::SyntaxError, at, "leading zeros are not allowed");
    }
    while (pos_ < src_.size() && digit(src_[pos_])) advance();
    bool is_float = false;
    if (pos_ < src_.size() && src_[pos_] == '.') {
      is_float = true;
      advance();
      if (pos_ >= src_.size() || !digit(src_[pos_])) throw QueryError(ErrorCode::SyntaxError, at, "malformed number");
      while (pos_ < src_.size() && digit(src_[pos_])) advance();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      is_float = true;
      advance();
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) advance();
      if (pos_ >= src_.size() || !digit(src_[pos_])) throw QueryError(ErrorCode::SyntaxError, at, "malformed number");
      while (pos_ < src_.size() && digit(src_[pos_])) advance();
    }
    if (pos_ < src_.size() && (name_start(src_[pos_]) || src_[pos_] == '.')) {
      throw QueryError(ErrorCode::SyntaxError, at, "malformed number");
    }
    return {is_float ? TokenKind::Float : TokenKind::Int, std::string(src_.substr(start, pos_ - start)), at};
  }

  Token string(Position at) {
    advance();  // opening quote
    std::string out;
    while (true) {
      if (pos_ >= src_.size() || src_[pos_] == '\n') {
        throw QueryError(ErrorCode::SyntaxError, at, "unterminated string");
      }
      const char c = src_[pos_];
      if (c == '"') {
        advance();
        return {TokenKind::String, std::move(out), at};
      }
      if (c != '\\') {
        out.push_back(c);
        advance();
        continue;
      }
      const Position esc = here();
      advance();
      if (pos_ >= src_.size()) throw QueryError(ErrorCode::SyntaxError, esc, "unterminated string");
      const char e = src_[pos_];
      advance();
      switch (e) {
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        case '/': out.push_back('/'); break;
        case 'b': out.push_back('\b'); break;
        case 'f': out.push_back('\f'); break;
        case 'n': out.push_back('\n'); break;
        case 'r': out.push_back('\r'); break;
        case 't': out.push_back('\t'); break;
        case 'u': {
          if (pos_ + 4 > src_.size()) throw QueryError(ErrorCode::SyntaxError, esc, "bad unicode escape");
          unsigned cp = 0;
          for (int i = 0; i < 4; ++i) {
            const char h = src_[pos_];
            cp <<= 4;
            if (digit(h)) cp |= static_cast<unsigned>(h - '0');
            else if (h >= 'a' && h <= 'f') cp |= static_cast<unsigned>(h - 'a' + 10);
            else if (h >= 'A' && h <= 'F') cp |= static_cast<unsigned>(h - 'A' + 10);
            else throw QueryError(ErrorCode::SyntaxError, esc, "bad unicode escape");
            advance();
          }
          append_utf8(out, cp);
          break;
        }
        default:
          throw QueryError(ErrorCode::SyntaxError, esc, std::string("bad escape '\\") + e + "'");
      }
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

}  // namespace

std::vector<Token> tokenize(std::string_view source) { return Lexer(source).run(); }

}  // namespace millstone::queryapi::detail
