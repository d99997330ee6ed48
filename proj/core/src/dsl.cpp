#include "dcpcanon/dsl.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>
#include <set>
#include <sstream>

namespace dcpcanon {

namespace {

std::string JoinDiagnostics(const std::vector<Diagnostic>& ds) {
  std::ostringstream os;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (i) os << "; ";
    os << ds[i].line << ':' << ds[i].column << ": " << ds[i].message;
  }
  return os.str();
}

}  // namespace

ParseError::ParseError(std::vector<Diagnostic> diagnostics)
    : Error(ErrorKind::ParseError, JoinDiagnostics(diagnostics)),
      diagnostics_(std::move(diagnostics)) {}

std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

namespace {

struct Token {
  enum class Kind { Ident, Number, Keyword, Symbol, End };
  Kind kind = Kind::End;
  std::string text;
  double number = 0.0;
  bool integral = false;
  std::size_t line = 1;
  std::size_t column = 1;
  std::size_t offset = 0;
  std::size_t end_offset = 0;
};

// Unexpected input aborts parsing; semantic problems are collected.
struct SyntaxAbort {};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> run(std::vector<Diagnostic>& diags) {
    std::vector<Token> out;
    while (true) {
      skip_space();
      Token t;
      t.line = line_;
      t.column = col_;
      t.offset = pos_;
      if (pos_ >= text_.size()) {
        t.kind = Token::Kind::End;
        t.end_offset = pos_;
        out.push_back(t);
        return out;
      }
      const char c = text_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        t.kind = Token::Kind::Ident;
        while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                                       text_[pos_] == '_')) {
          advance();
        }
        t.text = std::string(text_.substr(t.offset, pos_ - t.offset));
      } else if (c == '!') {
        t.kind = Token::Kind::Keyword;
        advance();
        while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) {
          advance();
        }
        t.text = std::string(text_.substr(t.offset, pos_ - t.offset));
      } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                 (c == '.' && pos_ + 1 < text_.size() &&
                  std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])))) {
        lex_number(t, diags);
      } else {
        t.kind = Token::Kind::Symbol;
        static constexpr std::array<std::string_view, 2> two = {"<=", ">="};
        bool matched = false;
        for (std::string_view s : two) {
          if (text_.substr(pos_, 2) == s) {
            advance();
            advance();
            t.text = std::string(s);
            matched = true;
          }
        }
        if (!matched) {
          if (std::string_view("+-*/^(),:<>=").find(c) == std::string_view::npos) {
            diags.push_back({line_, col_, std::string("unexpected character '") + c + "'"});
            throw SyntaxAbort{};
          }
          advance();
          t.text = std::string(1, c);
        }
      }
      t.end_offset = pos_;
      out.push_back(t);
    }
  }

 private:
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        return;
      }
    }
  }

  bool digit_at(std::size_t i) const {
    return i < text_.size() && std::isdigit(static_cast<unsigned char>(text_[i]));
  }

  void lex_number(Token& t, std::vector<Diagnostic>& diags) {
    t.kind = Token::Kind::Number;
    t.integral = true;
    while (digit_at(pos_)) advance();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      t.integral = false;
      advance();
      while (digit_at(pos_)) advance();
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < text_.size() && (text_[look] == '+' || text_[look] == '-')) ++look;
      if (digit_at(look)) {
        t.integral = false;
        while (pos_ < look) advance();
        while (digit_at(pos_)) advance();
      }
    }
    t.text = std::string(text_.substr(t.offset, pos_ - t.offset));
    const char* first = t.text.data();
    const char* last = first + t.text.size();
    auto [ptr, ec] = std::from_chars(first, last, t.number);
    if (ec != std::errc() || ptr != last) {
      diags.push_back({t.line, t.column, "malformed number '" + t.text + "'"});
      throw SyntaxAbort{};
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

const std::set<std::string, std::less<>>& AtomFunctions() {
  static const std::set<std::string, std::less<>> names = {"exp", "log", "sqrt", "abs"};
  return names;
}

Op FunctionOp(std::string_view name) {
  if (name == "exp") return Op::Exp;
  if (name == "log") return Op::Log;
  if (name == "sqrt") return Op::Sqrt;
  return Op::Abs;
}

class Parser {
 public:
  Parser(std::vector<Token> tokens, std::vector<Diagnostic>& diags)
      : toks_(std::move(tokens)), diags_(diags) {}

  SourceProblem problem(std::string text) {
    SourceProblem sp;
    sp.text = std::move(text);
    expect_ident("minimization");
    if (at_keyword("!params")) {
      next();
      params();
    }
    if (!at_keyword("!vars")) fail("expected !vars");
    next();
    if (peek().kind != Token::Kind::Ident) fail("expected at least one variable name");
    while (peek().kind == Token::Kind::Ident) {
      const Token& t = next();
      declare(t);
      scope_.variables.push_back(t.text);
    }
    if (!at_keyword("!objective")) fail("expected !objective");
    next();
    scope_.objective = expr();
    if (at_keyword("!constraints")) {
      next();
      do {
        const Token& first = peek();
        SourceSpan span{first.offset, 0, first.line, first.column};
        scope_.constraints.push_back(constraint());
        span.end = toks_[pos_ - 1].end_offset;
        sp.constraint_spans.push_back(span);
      } while (accept(","));
    }
    if (peek().kind != Token::Kind::End) fail("unexpected '" + peek().text + "'");
    sp.problem = scope_;
    return sp;
  }

  void set_scope(const Problem& p) { scope_ = p; }

  Expr expr() { return additive(); }

  Constraint constraint() {
    Expr lhs = expr();
    Comparator cmp;
    const Token& t = peek();
    if (t.kind == Token::Kind::Symbol && t.text == "<=") {
      cmp = Comparator::Le;
    } else if (t.kind == Token::Kind::Symbol && t.text == "<") {
      cmp = Comparator::Lt;
    } else if (t.kind == Token::Kind::Symbol && t.text == "=") {
      cmp = Comparator::Eq;
    } else if (t.kind == Token::Kind::Symbol && t.text == ">=") {
      cmp = Comparator::Ge;
    } else if (t.kind == Token::Kind::Symbol && t.text == ">") {
      cmp = Comparator::Gt;
    } else {
      fail("expected a comparator (<=, <, =, >=, >)");
    }
    next();
    Expr rhs = expr();
    return {std::move(lhs), cmp, std::move(rhs)};
  }

  bool at_end() const { return toks_[pos_].kind == Token::Kind::End; }
  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }

  [[noreturn]] void fail(const std::string& msg) {
    diags_.push_back({peek().line, peek().column, msg});
    throw SyntaxAbort{};
  }

 private:
  const Token& next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

  bool at_symbol(std::string_view s) const {
    return peek().kind == Token::Kind::Symbol && peek().text == s;
  }
  bool at_keyword(std::string_view s) const {
    return peek().kind == Token::Kind::Keyword && peek().text == s;
  }
  bool accept(std::string_view s) {
    if (!at_symbol(s)) return false;
    next();
    return true;
  }
  void expect(std::string_view s) {
    if (!accept(s)) fail("expected '" + std::string(s) + "'");
  }
  void expect_ident(std::string_view s) {
    if (peek().kind != Token::Kind::Ident || peek().text != s) {
      fail("expected '" + std::string(s) + "'");
    }
    next();
  }

  void error(const Token& t, const std::string& msg) {
    diags_.push_back({t.line, t.column, msg});
  }

  void declare(const Token& t) {
    if (AtomFunctions().count(t.text) || t.text == "minimization") {
      error(t, "'" + t.text + "' is reserved and cannot be declared");
    } else if (scope_.has_variable(t.text) || scope_.find_param(t.text)) {
      error(t, "duplicate declaration of '" + t.text + "'");
    }
  }

  void params() {
    do {
      if (peek().kind != Token::Kind::Ident) fail("expected a parameter name");
      const Token& t = next();
      declare(t);
      ParamDecl pd{t.text, SignAttr::None};
      if (accept(":")) {
        if (peek().kind != Token::Kind::Ident) fail("expected a sign attribute");
        const Token& s = next();
        if (s.text == "nonneg") {
          pd.sign = SignAttr::Nonneg;
        } else if (s.text == "pos") {
          pd.sign = SignAttr::Pos;
        } else if (s.text == "nonpos") {
          pd.sign = SignAttr::Nonpos;
        } else if (s.text == "neg") {
          pd.sign = SignAttr::Neg;
        } else {
          error(s, "unknown sign attribute '" + s.text + "'");
        }
      }
      scope_.params.push_back(pd);
    } while (accept(","));
  }

  Expr additive() {
    Expr lhs = multiplicative();
    while (at_symbol("+") || at_symbol("-")) {
      const bool plus = next().text == "+";
      Expr rhs = multiplicative();
      lhs = plus ? add(std::move(lhs), std::move(rhs)) : sub(std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  Expr multiplicative() {
    Expr lhs = unary();
    while (at_symbol("*") || at_symbol("/")) {
      const bool times = next().text == "*";
      Expr rhs = unary();
      lhs = times ? mul(std::move(lhs), std::move(rhs)) : div(std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  Expr unary() {
    if (at_symbol("-")) {
      next();
      // A literal directly after unary minus is a negative constant, unless
      // it is the base of a power (-2 ^ 2 is -(2 ^ 2)).
      if (peek().kind == Token::Kind::Number &&
          !(peek(1).kind == Token::Kind::Symbol && peek(1).text == "^")) {
        return Expr::constant(-next().number);
      }
      return neg(unary());
    }
    return power();
  }

  Expr power() {
    Expr base = primary();
    if (at_symbol("^")) {
      next();
      const Token& t = peek();
      if (t.kind != Token::Kind::Number || !t.integral) {
        error(t, "exponent must be an integer literal");
        if (t.kind == Token::Kind::Number) {
          next();
          return base;
        }
        fail("expected an integer exponent");
      }
      next();
      if (t.number < 1 || t.number > 1e6) {
        error(t, "exponent must be a positive integer");
        return base;
      }
      return pow(std::move(base), static_cast<int>(t.number));
    }
    return base;
  }

  Expr primary() {
    const Token& t = peek();
    if (t.kind == Token::Kind::Number) {
      next();
      return Expr::constant(t.number);
    }
    if (accept("(")) {
      Expr e = expr();
      expect(")");
      return e;
    }
    if (t.kind != Token::Kind::Ident) fail("expected an expression");
    const Token& name = next();
    if (at_symbol("(")) {
      next();
      std::vector<Expr> args;
      if (!at_symbol(")")) {
        do {
          args.push_back(expr());
        } while (accept(","));
      }
      expect(")");
      if (!AtomFunctions().count(name.text)) {
        error(name, "unknown function '" + name.text + "'");
        return Expr::constant(0.0);
      }
      if (args.size() != 1) {
        error(name, "arity mismatch: " + name.text + " takes 1 argument, got " +
                        std::to_string(args.size()));
        return Expr::constant(0.0);
      }
      return Expr::apply(FunctionOp(name.text), std::move(args));
    }
    if (AtomFunctions().count(name.text)) {
      error(name, "atom '" + name.text + "' requires an argument list");
      return Expr::constant(0.0);
    }
    if (scope_.has_variable(name.text)) return Expr::variable(name.text);
    if (scope_.find_param(name.text)) return Expr::parameter(name.text);
    error(name, "unknown identifier '" + name.text + "'");
    return Expr::constant(0.0);
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::vector<Diagnostic>& diags_;
  Problem scope_;
};

template <typename F>
auto RunParser(std::string_view text, F&& body) {
  std::vector<Diagnostic> diags;
  try {
    Lexer lexer(text);
    Parser parser(lexer.run(diags), diags);
    auto result = body(parser);
    if (!diags.empty()) throw ParseError(std::move(diags));
    return result;
  } catch (const SyntaxAbort&) {
    throw ParseError(std::move(diags));
  }
}

}  // namespace

SourceProblem parse_source(std::string text) {
  std::string copy = text;
  return RunParser(copy, [&](Parser& p) { return p.problem(std::move(text)); });
}

Problem parse(std::string_view text) { return parse_source(std::string(text)).problem; }

Expr parse_expression(std::string_view text, const Problem& scope) {
  return RunParser(text, [&](Parser& p) {
    p.set_scope(scope);
    Expr e = p.expr();
    if (!p.at_end()) p.fail("unexpected '" + p.peek().text + "'");
    return e;
  });
}

Constraint parse_constraint(std::string_view text, const Problem& scope) {
  return RunParser(text, [&](Parser& p) {
    p.set_scope(scope);
    Constraint c = p.constraint();
    if (!p.at_end()) p.fail("unexpected '" + p.peek().text + "'");
    return c;
  });
}

namespace {

// Binding strength used to decide parenthesization; mirrors the parser.
int Precedence(const Expr& e) {
  switch (e.kind()) {
    case Expr::Kind::Constant: return std::signbit(e.value()) ? 3 : 5;
    case Expr::Kind::Parameter:
    case Expr::Kind::Variable: return 5;
    case Expr::Kind::Apply:
      switch (e.op()) {
        case Op::Add:
        case Op::Sub: return 1;
        case Op::Mul:
        case Op::Div: return 2;
        case Op::Neg: return 3;
        case Op::Pow: return 4;
        default: return 5;
      }
  }
  return 5;
}

void PrintExpr(const Expr& e, std::string& out);

void PrintOperand(const Expr& e, bool parens, std::string& out) {
  if (parens) out += '(';
  PrintExpr(e, out);
  if (parens) out += ')';
}

void PrintExpr(const Expr& e, std::string& out) {
  switch (e.kind()) {
    case Expr::Kind::Constant: out += format_number(e.value()); return;
    case Expr::Kind::Parameter:
    case Expr::Kind::Variable: out += e.name(); return;
    case Expr::Kind::Apply: break;
  }
  const auto args = e.args();
  const int prec = Precedence(e);
  switch (e.op()) {
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div: {
      static constexpr std::string_view sym[] = {" + ", " - ", "", " * ", " / "};
      PrintOperand(args[0], Precedence(args[0]) < prec, out);
      out += sym[static_cast<int>(e.op())];
      PrintOperand(args[1], Precedence(args[1]) <= prec, out);
      return;
    }
    case Op::Neg: {
      out += '-';
      const bool literal = args[0].is_constant() && !std::signbit(args[0].value());
      PrintOperand(args[0], literal || Precedence(args[0]) < 3, out);
      return;
    }
    case Op::Pow:
      PrintOperand(args[0], Precedence(args[0]) < 5, out);
      out += " ^ ";
      out += std::to_string(e.exponent());
      return;
    default:
      out += op_name(e.op());
      out += '(';
      PrintExpr(args[0], out);
      out += ')';
      return;
  }
}

}  // namespace

std::string print(const Expr& e) {
  std::string out;
  PrintExpr(e, out);
  return out;
}

std::string print(const Constraint& c) {
  return print(c.lhs) + " " + std::string(comparator_symbol(c.cmp)) + " " + print(c.rhs);
}

std::string print(const Problem& p) {
  std::string out = "minimization\n";
  if (!p.params.empty()) {
    out += "  !params ";
    for (std::size_t i = 0; i < p.params.size(); ++i) {
      if (i) out += ", ";
      out += p.params[i].name;
      if (p.params[i].sign != SignAttr::None) {
        out += ": ";
        out += sign_attr_name(p.params[i].sign);
      }
    }
    out += '\n';
  }
  out += "  !vars";
  for (const std::string& v : p.variables) out += " " + v;
  out += "\n  !objective " + print(p.objective) + "\n";
  if (!p.constraints.empty()) {
    out += "  !constraints\n";
    for (std::size_t i = 0; i < p.constraints.size(); ++i) {
      out += "    " + print(p.constraints[i]);
      out += i + 1 < p.constraints.size() ? ",\n" : "\n";
    }
  }
  return out;
}

}  // namespace dcpcanon
