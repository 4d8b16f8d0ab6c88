#include "pm/token.hpp"

#include <array>
#include <cctype>
#include <unordered_set>

namespace pm {

static const std::unordered_set<std::string> kKeywords = {
    "module",     "dimensions", "param",     "topology", "particles",
    "neighborlist", "timeloop", "foreach",   "in",       "deqn",
    "on",         "using",      "if",        "else",     "apply_bc",
    "update_neighbors", "write", "load",     "from",     "columns",
    "grid",       "random",     "boundary",  "periodic", "none",
    "cutoff",     "real",       "int",       "bool",     "string",
    "vector",     "matrix",     "range",     "step",     "to",
    "d_dt",       "inline",     "neighbors", "euler",    "rk4",
};

bool is_reserved_keyword(const std::string& word) {
  return kKeywords.count(word) > 0;
}

namespace {

class Lexer {
public:
  explicit Lexer(const std::string& src) : src_(src) {}

  LexResult run() {
    while (!at_end()) {
      start_ = pos_;
      start_line_ = line_;
      start_col_ = col_;
      scan();
    }
    push(TokenKind::EndOfFile, "");
    return {std::move(tokens_), std::move(diags_)};
  }

private:
  bool at_end() const { return pos_ >= src_.size(); }
  char peek(size_t off = 0) const {
    return pos_ + off < src_.size() ? src_[pos_ + off] : '\0';
  }
  char advance() {
    char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }
  bool match(char expect) {
    if (peek() != expect) return false;
    advance();
    return true;
  }
  bool match_seq(const char* s) {
    size_t n = 0;
    while (s[n]) {
      if (peek(n) != s[n]) return false;
      ++n;
    }
    for (size_t i = 0; i < n; ++i) advance();
    return true;
  }

  Span span() const {
    return {start_line_, start_col_, static_cast<uint32_t>(pos_ - start_)};
  }
  void push(TokenKind kind, std::string lexeme) {
    tokens_.push_back({kind, std::move(lexeme), span()});
  }
  void push_here(TokenKind kind) {
    push(kind, src_.substr(start_, pos_ - start_));
  }

  void scan() {
    char c = advance();
    switch (c) {
      case ' ':
      case '\t':
      case '\r':
        return;
      case '\n':
        push(TokenKind::Newline, "\n");
        return;
      case '(': case ')': case '{': case '}':
      case '[': case ']': case ',': case ';':
        push_here(TokenKind::Punctuation);
        return;
      case '+': case '*': case '^':
        push_here(TokenKind::Operator);
        return;
      case '-':
        if (match('>')) {
          push(TokenKind::Operator, "->");
        } else {
          push(TokenKind::Operator, "-");
        }
        return;
      case '/':
        if (match('/')) {
          while (!at_end() && peek() != '\n') advance();
          return;  // comment
        }
        push(TokenKind::Operator, "/");
        return;
      case '&':
        if (match('&')) {
          push(TokenKind::Operator, "&&");
          return;
        }
        break;
      case '|':
        if (match('|')) {
          push(TokenKind::Operator, "||");
          return;
        }
        break;
      case '=':
        push(TokenKind::Operator, match('=') ? "==" : "=");
        return;
      case '!':
        push(TokenKind::Operator, match('=') ? "!=" : "!");
        return;
      case '<':
        push(TokenKind::Operator, match('=') ? "<=" : "<");
        return;
      case '>':
        push(TokenKind::Operator, match('=') ? ">=" : ">");
        return;
      case '"':
        scan_string();
        return;
      case '@':
        if (match_seq("optimize")) {
          push(TokenKind::Punctuation, "@optimize");
          return;
        }
        break;
      default:
        if (std::isdigit(static_cast<unsigned char>(c))) {
          scan_number();
          return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
          scan_word();
          return;
        }
        // UTF-8 aliases for mathematical operators.
        if (static_cast<unsigned char>(c) == 0xE2) {
          if (match_seq("\x88\x82")) {  // partial derivative sign
            push(TokenKind::Keyword, "d_dt");
            return;
          }
          if (match_seq("\x88\x9A")) {  // radical sign
            push(TokenKind::Operator, "sqrt");
            return;
          }
          if (match_seq("\x88\x87\xC2\xB2")) {  // nabla squared
            push(TokenKind::Operator, "laplacian");
            return;
          }
        }
        break;
    }
    // Consume any UTF-8 continuation bytes so the caret lands on a character.
    while (!at_end() && (static_cast<unsigned char>(peek()) & 0xC0) == 0x80)
      advance();
    diags_.report("E1001", span(),
                  "character '" + src_.substr(start_, pos_ - start_) +
                      "' is not part of the language alphabet");
  }

  void scan_string() {
    while (!at_end() && peek() != '"' && peek() != '\n') advance();
    if (!match('"')) {
      diags_.report("E1003", span(), "unterminated string literal");
      return;
    }
    push_here(TokenKind::StringLiteral);
  }

  void scan_number() {
    bool is_real = false;
    while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
    if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
      is_real = true;
      advance();
      while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
    }
    if (peek() == 'e' || peek() == 'E') {
      size_t off = 1;
      if (peek(1) == '+' || peek(1) == '-') off = 2;
      if (std::isdigit(static_cast<unsigned char>(peek(off)))) {
        is_real = true;
        for (size_t i = 0; i <= off; ++i) advance();
        while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
      }
    }
    push_here(is_real ? TokenKind::RealLiteral : TokenKind::IntegerLiteral);
  }

  void scan_word() {
    while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')
      advance();
    std::string word = src_.substr(start_, pos_ - start_);
    if (word == "true" || word == "false") {
      push(TokenKind::BooleanLiteral, word);
    } else if (word == "sqrt" || word == "laplacian") {
      push(TokenKind::Operator, word);
    } else if (kKeywords.count(word)) {
      push(TokenKind::Keyword, word);
    } else {
      push(TokenKind::Identifier, word);
    }
  }

  const std::string& src_;
  size_t pos_ = 0, start_ = 0;
  uint32_t line_ = 1, col_ = 1;
  uint32_t start_line_ = 1, start_col_ = 1;
  std::vector<Token> tokens_;
  DiagnosticSink diags_;
};

}  // namespace

LexResult tokenize(const std::string& source) { return Lexer(source).run(); }

}  // namespace pm
