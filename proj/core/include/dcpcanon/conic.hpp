#ifndef DCPCANON_CONIC_HPP
#define DCPCANON_CONIC_HPP

// Conic form:
//
//   minimize    c^T x + offset
//   subject to  A x = b,  G x - h in K = K_1 x ... x K_p
//
// with each K_i a nonnegative orthant, a second-order cone
// {v : v_1 >= ||v_2..l||} or the exponential cone
// {v : v_1 >= v_2 exp(v_3 / v_2), v_2 > 0} u {v_1 >= 0, v_2 = 0, v_3 <= 0}.
//
// Dual convention: multipliers y for A x = b and z in K* for the cone rows
// with A^T y + G^T z = c certify the lower bound b^T y + h^T z (+ offset) on
// the objective of every feasible x.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "dcpcanon/problem.hpp"

namespace dcpcanon {

enum class ConeKind { Orthant, Soc, Exp };

std::string_view cone_kind_name(ConeKind k);

struct ConeBlock {
  ConeKind kind = ConeKind::Orthant;
  std::size_t dim = 1;

  static ConeBlock orthant(std::size_t l) { return {ConeKind::Orthant, l}; }
  static ConeBlock soc(std::size_t l) { return {ConeKind::Soc, l}; }
  static ConeBlock exp() { return {ConeKind::Exp, 3}; }

  std::string to_string() const;

  friend bool operator==(const ConeBlock&, const ConeBlock&) = default;
};

struct ConicProblem {
  std::vector<std::string> variables;
  Eigen::VectorXd c;
  double offset = 0.0;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::MatrixXd G;
  Eigen::VectorXd h;
  std::vector<ConeBlock> cones;

  std::size_t num_vars() const { return variables.size(); }
  std::size_t num_eq() const { return static_cast<std::size_t>(A.rows()); }
  std::size_t cone_dim() const;
  /// Throws Error(DimensionMismatch) on inconsistent shapes.
  void validate() const;

  friend bool operator==(const ConicProblem& x, const ConicProblem& y);
};

struct DualCertificate {
  Eigen::VectorXd y;  // one per equality row
  Eigen::VectorXd z;  // blocked like the cones
};

struct AffineForm {
  Eigen::VectorXd coef;
  double constant = 0.0;
};

/// Coefficients of `e` over `vars` after substituting parameter values, or
/// nullopt when `e` is not affine in the variables.
std::optional<AffineForm> affine_form(const Expr& e, const Assignment& params,
                                      const std::vector<std::string>& vars);

/// Emits a fully expanded problem. Recognized constraint shapes:
///   affine = affine          -> row of (A, b)
///   affine <= affine         -> ORTHANT 1 (rhs - lhs)
///   u ^ 2 <= e  (u, e affine) -> SOC 3 ((e + 1) / 2, (e - 1) / 2, u)
///   exp(u) <= e (u, e affine) -> EXP (e, 1, u)
/// and their >= mirrors. Equality rows come first in constraint order, then
/// one cone block per remaining constraint in constraint order. `order`
/// fixes the variable order (a permutation of p.variables).
ConicProblem emit(const Problem& p, const Assignment& params,
                  const std::optional<std::vector<std::string>>& order = std::nullopt);

bool cone_member(const ConeBlock& block, std::span<const double> v, double tol);
bool dual_cone_member(const ConeBlock& block, std::span<const double> z, double tol);

struct PrimalVerdict {
  bool feasible = false;
  double objective = 0.0;
  double eq_residual = 0.0;  // ||Ax - b||_inf
  std::optional<std::size_t> failed_row;
  std::optional<std::size_t> failed_block;
  std::string reason;
};

PrimalVerdict check_primal(const ConicProblem& cp, const Eigen::VectorXd& x, double tol);

struct DualVerdict {
  bool accepted = false;
  double bound = 0.0;
  double stationarity_residual = 0.0;  // ||A^T y + G^T z - c||_inf
  std::optional<std::size_t> failed_block;
  std::string reason;
};

DualVerdict check_dual_bound(const ConicProblem& cp, const DualCertificate& cert, double tol);

struct Solution {
  Eigen::VectorXd primal;
  std::optional<DualCertificate> dual;
};

std::string write_conic(const ConicProblem& cp);
ConicProblem read_conic(std::string_view text);
std::string write_solution(const Solution& s);
Solution read_solution(std::string_view text);

/// The conic problem as an ordinary Problem over the same variables, so it
/// can be searched and checked point-wise.
Problem to_problem(const ConicProblem& cp);

}  // namespace dcpcanon

#endif  // DCPCANON_CONIC_HPP
