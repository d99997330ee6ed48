#ifndef DCPCANON_DCP_HPP
#define DCPCANON_DCP_HPP

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dcpcanon/atoms.hpp"
#include "dcpcanon/problem.hpp"

namespace dcpcanon {

/// Names a subterm: the objective or one side of a constraint, then child
/// indices. Printable form: `c0/rhs/0/1`, `obj/0`.
struct OccurrencePath {
  enum class Root { Objective, Constraint };
  enum class Side { Lhs, Rhs };
  Root root = Root::Constraint;
  std::size_t constraint = 0;
  Side side = Side::Lhs;
  std::vector<std::size_t> children;

  static OccurrencePath parse(std::string_view text);
  std::string to_string() const;

  friend bool operator==(const OccurrencePath&, const OccurrencePath&) = default;
};

/// Subterm named by `path`; throws Error(InvalidPath).
const Expr& subterm(const Problem& p, const OccurrencePath& path);

// Both: the subterm is an entire affine side of an equality.
enum class Polarity { Monotone, Antimonotone, Both, Unknown };

std::string_view polarity_name(Polarity p);
Polarity flip(Polarity p);

using SignContext = std::map<std::string, Sign, std::less<>>;

SignContext sign_context(const Problem& p);

struct ExprInfo {
  Curvature curvature = Curvature::Unknown;
  Sign sign = Sign::Unknown;
};

/// Bottom-up curvature and sign by the DCP composition rules. Returns
/// Unknown curvature whenever no rule applies, never a wrong label.
ExprInfo curvature_of(const Expr& e, const SignContext& signs);

Polarity polarity_of(const Problem& p, const OccurrencePath& path);

struct Occurrence {
  OccurrencePath path;
  Polarity polarity;
};

/// Every constraint-side occurrence structurally equal to `target`, in
/// constraint order, lhs before rhs, pre-order within a side.
std::vector<Occurrence> find_occurrences(const Problem& p, const Expr& target);

struct ConstraintDiagnosis {
  std::size_t constraint = 0;
  bool ok = true;
  OccurrencePath::Side side = OccurrencePath::Side::Lhs;
  Curvature required = Curvature::Convex;
  Curvature inferred = Curvature::Convex;
  OccurrencePath failing;  // first failing subterm when !ok
  std::string message;     // "constraint #k: required concave, got unknown at <subterm>"
};

struct DcpVerdict {
  bool conformant = true;
  bool objective_ok = true;
  Curvature objective_curvature = Curvature::Constant;
  std::string objective_message;
  std::vector<ConstraintDiagnosis> constraints;
  std::vector<ExprInfo> lhs_info;
  std::vector<ExprInfo> rhs_info;
};

DcpVerdict dcp_check(const Problem& p);

}  // namespace dcpcanon

#endif  // DCPCANON_DCP_HPP
