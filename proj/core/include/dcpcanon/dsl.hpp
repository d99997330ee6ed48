#ifndef DCPCANON_DSL_HPP
#define DCPCANON_DSL_HPP

// Text syntax for problems:
//
//   minimization
//     !params a: nonneg, b, c, d
//     !vars x y
//     !objective c * x
//     !constraints
//       exp(y) <= log(a * sqrt(x) + b),
//       a * x + b * y = d
//
// Whitespace-insensitive; `#` starts a line comment. Operator precedence,
// loosest first: `+ -`, `* /`, unary `-`, `^` (integer literal exponent),
// application exp/log/sqrt/abs.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "dcpcanon/error.hpp"
#include "dcpcanon/expr.hpp"
#include "dcpcanon/problem.hpp"

namespace dcpcanon {

struct Diagnostic {
  std::size_t line = 0;  // 1-based
  std::size_t column = 0;
  std::string message;
};

class ParseError : public Error {
 public:
  explicit ParseError(std::vector<Diagnostic> diagnostics);
  const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

struct SourceSpan {
  std::size_t begin = 0;  // byte offsets, end exclusive
  std::size_t end = 0;
  std::size_t line = 0;
  std::size_t column = 0;
};

struct SourceProblem {
  std::string text;
  Problem problem;
  std::vector<SourceSpan> constraint_spans;
};

SourceProblem parse_source(std::string text);
Problem parse(std::string_view text);

/// Parse a single expression / constraint against the declarations of `scope`.
Expr parse_expression(std::string_view text, const Problem& scope);
Constraint parse_constraint(std::string_view text, const Problem& scope);

std::string print(const Problem& p);
std::string print(const Expr& e);
std::string print(const Constraint& c);

/// Shortest decimal text that reads back to the same double.
std::string format_number(double v);

}  // namespace dcpcanon

#endif  // DCPCANON_DSL_HPP
