#ifndef DCPCANON_PROBLEM_HPP
#define DCPCANON_PROBLEM_HPP

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dcpcanon/expr.hpp"

namespace dcpcanon {

enum class Comparator { Le, Lt, Eq, Ge, Gt };

std::string_view comparator_symbol(Comparator cmp);
bool is_strict(Comparator cmp);

struct Constraint {
  Expr lhs;
  Comparator cmp;
  Expr rhs;

  friend bool operator==(const Constraint&, const Constraint&) = default;
};

/// Rewrites `a >= b` to `b <= a` and `a > b` to `b < a`; other forms unchanged.
Constraint oriented(const Constraint& c);

enum class SignAttr { None, Nonneg, Pos, Nonpos, Neg };

std::string_view sign_attr_name(SignAttr s);
bool satisfies(SignAttr s, double value);

struct ParamDecl {
  std::string name;
  SignAttr sign = SignAttr::None;

  friend bool operator==(const ParamDecl&, const ParamDecl&) = default;
};

/// Values for variables and parameters, keyed by name.
using Assignment = std::map<std::string, double, std::less<>>;

/// A minimization problem over R^n, n = variables.size(). Maximization is
/// expressed by negating the objective.
struct Problem {
  std::vector<std::string> variables;
  std::vector<ParamDecl> params;
  Expr objective = Expr::constant(0.0);
  std::vector<Constraint> constraints;

  bool has_variable(std::string_view name) const;
  const ParamDecl* find_param(std::string_view name) const;
  /// Checks name uniqueness and that every reference resolves with the right
  /// kind. Throws Error(InvalidProblem).
  void validate() const;

  friend bool operator==(const Problem&, const Problem&) = default;
};

double eval(const Expr& e, const Assignment& point);

struct FeasibilityVerdict {
  enum class Status { Feasible, Violated, DomainError };
  Status status = Status::Feasible;
  std::size_t constraint = 0;  // first offending constraint
  double residual = 0.0;       // amount by which it is violated
  std::string atom;            // DomainError only
  double argument = 0.0;       // DomainError only

  bool feasible() const { return status == Status::Feasible; }
};

/// Non-strict comparisons get `tol` slack; strict ones get none.
bool holds(const Constraint& c, const Assignment& point, double tol);
/// Amount by which `c` is violated at `point` (0 when it holds with no slack).
double residual(const Constraint& c, const Assignment& point);

FeasibilityVerdict check_feasible(const Problem& p, const Assignment& point, double tol);
double objective_value(const Problem& p, const Assignment& point);

/// Same problem with the objective replaced by the constant 0.
Problem to_feasibility(const Problem& p);
/// to_feasibility(p) with `objective <= bound` appended.
Problem bound_problem(const Problem& p, double bound);

/// Checks that every parameter of `p` has a value and that the value
/// respects the declared sign. Throws UnboundParameter / SignViolation.
void check_params_bound(const Problem& p, const Assignment& params);

/// `a` merged with `b`; entries in `b` win.
Assignment merged(const Assignment& a, const Assignment& b);

}  // namespace dcpcanon

#endif  // DCPCANON_PROBLEM_HPP
