#ifndef DCPCANON_ATOMS_HPP
#define DCPCANON_ATOMS_HPP

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dcpcanon/expr.hpp"
#include "dcpcanon/problem.hpp"

namespace dcpcanon {

// constant < affine < {convex, concave}; unknown means "no rule applied".
enum class Curvature { Constant, Affine, Convex, Concave, Unknown };

std::string_view curvature_name(Curvature c);
bool is_affine(Curvature c);
bool is_convex(Curvature c);
bool is_concave(Curvature c);
Curvature negate(Curvature c);

// Zero is both nonneg and nonpos.
enum class Sign { Unknown, Nonneg, Nonpos, Zero };

std::string_view sign_name(Sign s);
bool is_nonneg(Sign s);
bool is_nonpos(Sign s);
Sign sign_of(double v);
Sign sign_of(SignAttr s);
Sign negate(Sign s);
Sign sign_sum(Sign a, Sign b);
Sign sign_product(Sign a, Sign b);

enum class Monotonicity { Nondecreasing, Nonincreasing, None };

std::string_view monotonicity_name(Monotonicity m);

struct AtomSig {
  std::string name;
  Op op;
  int exponent = 0;  // pow only
  std::size_t arity;
  /// Curvature of the atom itself; may depend on argument signs (odd powers).
  std::function<Curvature(std::span<const Sign>)> curvature;
  /// Monotonicity in argument `i`, possibly conditioned on argument signs.
  std::function<Monotonicity(std::size_t i, std::span<const Sign>)> monotonicity;
  std::function<Sign(std::span<const Sign>)> sign;
  std::function<bool(std::span<const double>)> in_domain;
  std::function<double(std::span<const double>)> evaluate;
  /// mul needs one constant factor and div needs a constant denominator for
  /// the product to be DCP-typed; otherwise curvature is unknown.
  enum class FactorRule { None, EitherConstant, RightConstant } factor_rule = FactorRule::None;
};

/// Registry lookup by name: exp, log, sqrt, abs, add, sub, neg, mul, div,
/// and pow_k for integer k >= 1.
std::optional<AtomSig> atom_lookup(std::string_view name);
const AtomSig& atom_for(Op op, int exponent = 0);
std::string atom_name(Op op, int exponent = 0);

/// Evaluates one operator on numeric arguments. Throws DomainError outside
/// the atom's domain.
double apply_op(Op op, int exponent, std::span<const double> args);

enum class GraphDirection { Greatest, Least };

/// Describes atom(args) as the greatest (concave atoms) or least (convex
/// atoms) value t satisfying constraints(t, args), valid whenever the
/// domain facts hold.
struct GraphImplementation {
  std::string atom;
  Op op;
  int exponent = 0;  // pow only
  GraphDirection direction;
  std::function<std::vector<Constraint>(const Expr& t, std::span<const Expr> args)> constraints;
  std::function<std::vector<Constraint>(std::span<const Expr> args)> domain_facts;
};

/// Registered non-trivial implementations: sqrt and log (greatest), abs (least).
std::optional<GraphImplementation> graph_impl(std::string_view name);
std::optional<GraphImplementation> graph_impl(Op op);
/// The trivial implementation every atom has: greatest t with t <= f(args)
/// or least t with f(args) <= t.
GraphImplementation trivial_graph_impl(Op op, int exponent, GraphDirection direction);

struct GridSweep {
  double lo = -10.0;
  double hi = 10.0;
  double step = 1e-3;
};

struct IsGreatestVerdict {
  bool confirmed = false;
  double value = 0.0;        // atom(args)
  double violation = 0.0;    // worst excess found
  std::string reason;
};

/// Numerically checks that atom(args) satisfies the implementation's
/// constraints within 1e-9 and that no grid point satisfying them lies
/// beyond it by more than 1e-9 (above for Greatest, below for Least).
/// Throws DomainError if args are outside the atom's domain.
IsGreatestVerdict check_is_greatest(const GraphImplementation& gi, std::span<const double> args,
                                    const GridSweep& grid = {});

}  // namespace dcpcanon

#endif  // DCPCANON_ATOMS_HPP
