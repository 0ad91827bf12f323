#include "emery/parser.hpp"

#include <cctype>
#include <charconv>

namespace emery {

namespace {

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, Semi, End };

struct Token {
  Tok kind;
  std::string text;
  SourceSpan span;
  double number = 0.0;
};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : text_(text) { scan_all(); }
  const std::vector<Token>& tokens() const { return tokens_; }

 private:
  void scan_all() {
    std::size_t i = 0;
    int line = 1, col = 1;
    auto advance = [&](std::size_t n) {
      for (std::size_t k = 0; k < n; ++k) {
        if (text_[i + k] == '\n') {
          ++line;
          col = 1;
        } else {
          ++col;
        }
      }
      i += n;
    };
    while (i < text_.size()) {
      char c = text_[i];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance(1);
        continue;
      }
      SourceSpan span{i, i + 1, line, col};
      switch (c) {
        case '+': push(Tok::Plus, "+", span); advance(1); continue;
        case '-': push(Tok::Minus, "-", span); advance(1); continue;
        case '*': push(Tok::Star, "*", span); advance(1); continue;
        case '/': push(Tok::Slash, "/", span); advance(1); continue;
        case '^': push(Tok::Caret, "^", span); advance(1); continue;
        case '(': push(Tok::LParen, "(", span); advance(1); continue;
        case ')': push(Tok::RParen, ")", span); advance(1); continue;
        case ';': push(Tok::Semi, ";", span); advance(1); continue;
        default: break;
      }
      if (std::isdigit(static_cast<unsigned char>(c))) {
        std::size_t j = i;
        while (j < text_.size() && std::isdigit(static_cast<unsigned char>(text_[j]))) ++j;
        if (j < text_.size() && text_[j] == '.') {
          ++j;
          while (j < text_.size() && std::isdigit(static_cast<unsigned char>(text_[j]))) ++j;
        }
        if (j < text_.size() && (text_[j] == 'e' || text_[j] == 'E')) {
          std::size_t k = j + 1;
          if (k < text_.size() && (text_[k] == '+' || text_[k] == '-')) ++k;
          if (k < text_.size() && std::isdigit(static_cast<unsigned char>(text_[k]))) {
            j = k;
            while (j < text_.size() && std::isdigit(static_cast<unsigned char>(text_[j]))) ++j;
          }
        }
        Token t{Tok::Number, text_.substr(i, j - i), {i, j, line, col}, 0.0};
        std::from_chars(text_.data() + i, text_.data() + j, t.number);
        tokens_.push_back(std::move(t));
        advance(j - i);
        continue;
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t j = i;
        while (j < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[j])) || text_[j] == '_'))
          ++j;
        std::string word = text_.substr(i, j - i);
        // theta.<name> lexes as one identifier token.
        if (word == "theta" && j < text_.size() && text_[j] == '.') {
          std::size_t k = j + 1;
          while (k < text_.size() &&
                 (std::isalnum(static_cast<unsigned char>(text_[k])) || text_[k] == '_'))
            ++k;
          if (k == j + 1)
            throw ParseError("expected parameter name after 'theta.'", {j, j + 1, line, col});
          word = text_.substr(i, k - i);
          j = k;
        }
        tokens_.push_back({Tok::Ident, word, {i, j, line, col}, 0.0});
        advance(j - i);
        continue;
      }
      throw ParseError("unexpected character '" + std::string(1, c) + "'", span);
    }
    tokens_.push_back({Tok::End, "", {i, i, line, col}, 0.0});
  }

  void push(Tok k, const char* s, SourceSpan span) { tokens_.push_back({k, s, span, 0.0}); }

  const std::string& text_;
  std::vector<Token> tokens_;
};

class Parser {
 public:
  Parser(const std::string& text, int dim) : lexer_(text), dim_(dim) {}

  RepFunction run() {
    std::vector<Expr> components;
    components.push_back(parse_expr());
    while (peek().kind == Tok::Semi) {
      next();
      components.push_back(parse_expr());
    }
    expect(Tok::End, "end of input");
    return make_rep_function(std::move(components), dim_);
  }

 private:
  const Token& peek() const { return lexer_.tokens()[pos_]; }
  const Token& next() { return lexer_.tokens()[pos_++]; }

  void expect(Tok k, const char* what) {
    if (peek().kind != k)
      throw ParseError("expected " + std::string(what), peek().span, {what});
    next();
  }

  Expr parse_expr() {
    Expr e = parse_term();
    while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
      bool minus = next().kind == Tok::Minus;
      Expr rhs = parse_term();
      e = minus ? Expr::sub(std::move(e), std::move(rhs)) : Expr::add(std::move(e), std::move(rhs));
    }
    return e;
  }

  Expr parse_term() {
    Expr e = parse_unary();
    while (peek().kind == Tok::Star || peek().kind == Tok::Slash) {
      bool div = next().kind == Tok::Slash;
      Expr rhs = parse_unary();
      if (div) rhs = Expr::pow(std::move(rhs), ComplexValue(-1.0));
      e = Expr::mul(std::move(e), std::move(rhs));
    }
    return e;
  }

  Expr parse_unary() {
    if (peek().kind == Tok::Minus) {
      next();
      return Expr::neg(parse_unary());
    }
    return parse_postfix();
  }

  Expr parse_postfix() {
    Expr e = parse_atom();
    if (peek().kind == Tok::Caret) {
      next();
      e = Expr::pow(std::move(e), parse_exponent());
    }
    return e;
  }

  ComplexValue parse_exponent() {
    SourceSpan start = peek().span;
    bool negate = false;
    if (peek().kind == Tok::Minus) {
      next();
      negate = true;
    }
    Expr e;
    switch (peek().kind) {
      case Tok::Number:
        e = Expr::constant(next().number);
        break;
      case Tok::Ident:
        if (peek().text == "i") {
          next();
          e = Expr::constant(kImagUnit);
          break;
        }
        throw ParseError("exponent must be a constant", peek().span,
                         {"number", "i", "(constant expression)"});
      case Tok::LParen: {
        next();
        e = parse_expr();
        expect(Tok::RParen, "')'");
        break;
      }
      default:
        throw ParseError("exponent must be a constant", peek().span,
                         {"number", "i", "(constant expression)"});
    }
    if (peek().kind == Tok::Caret) {  // right-associative constant tower
      next();
      e = Expr::pow(std::move(e), parse_exponent());
    }
    if (negate) e = Expr::neg(std::move(e));
    if (e.kind() != Expr::Kind::Const) {
      SourceSpan span = start;
      span.end = peek().span.start;
      throw ParseError("exponent must be a constant", span,
                       {"number", "i", "(constant expression)"});
    }
    return e.const_value();
  }

  Expr parse_atom() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Number:
        return Expr::constant(next().number);
      case Tok::LParen: {
        next();
        Expr e = parse_expr();
        expect(Tok::RParen, "')'");
        return e;
      }
      case Tok::Ident:
        return parse_ident();
      default:
        throw ParseError("expected an expression", t.span,
                         {"number", "identifier", "'('", "'-'"});
    }
  }

  Expr parse_ident() {
    Token t = next();
    const std::string& w = t.text;
    if (w == "i") return Expr::constant(kImagUnit);
    if (w == "t") return Expr::time();
    if (w == "id") return make_var(1, t.span);
    if (w.size() == 3 && w.compare(0, 2, "id") == 0 && std::isdigit(static_cast<unsigned char>(w[2])) &&
        w[2] != '0')
      return make_var(w[2] - '0', t.span);
    if (w.rfind("theta.", 0) == 0) return Expr::param(w.substr(6));

    static const struct {
      const char* name;
      Expr (*make)(Expr);
    } funcs[] = {{"exp", &Expr::exp}, {"log", &Expr::log}, {"abs", &Expr::abs},
                 {"conj", &Expr::conj}, {"re", &Expr::re},   {"im", &Expr::im},
                 {"sgn", &Expr::sgn}};
    for (const auto& f : funcs) {
      if (w == f.name) {
        expect(Tok::LParen, "'('");
        Expr arg = parse_expr();
        expect(Tok::RParen, "')'");
        return f.make(std::move(arg));
      }
    }
    throw ParseError("unknown identifier '" + w + "'", t.span,
                     {"id", "id1..id9", "t", "i", "theta.<name>", "exp", "log", "abs", "conj",
                      "re", "im", "sgn"});
  }

  Expr make_var(int index, SourceSpan span) {
    if (index > dim_)
      throw ParseError("variable index " + std::to_string(index) + " exceeds dimension " +
                           std::to_string(dim_),
                       span);
    return Expr::var(index);
  }

  Lexer lexer_;
  int dim_;
  std::size_t pos_ = 0;
};

}  // namespace

RepFunction parse(const std::string& text, int dim) { return Parser(text, dim).run(); }

std::string format_parse_error(const std::string& text, const ParseError& err) {
  std::string out = "parse error at line " + std::to_string(err.span().line) + ", column " +
                    std::to_string(err.span().column) + ": " + err.what() + "\n";
  // Extract the offending line.
  std::size_t line_start = text.rfind('\n', err.span().start == 0 ? 0 : err.span().start - 1);
  line_start = line_start == std::string::npos ? 0 : line_start + 1;
  std::size_t line_end = text.find('\n', err.span().start);
  if (line_end == std::string::npos) line_end = text.size();
  out += "  " + text.substr(line_start, line_end - line_start) + "\n  ";
  for (std::size_t i = line_start; i < err.span().start; ++i) out += ' ';
  std::size_t width = err.span().end > err.span().start ? err.span().end - err.span().start : 1;
  for (std::size_t i = 0; i < width; ++i) out += '^';
  if (!err.expected().empty()) {
    out += "\n  expected: ";
    for (std::size_t i = 0; i < err.expected().size(); ++i) {
      if (i) out += ", ";
      out += err.expected()[i];
    }
  }
  out += "\n";
  return out;
}

}  // namespace emery
