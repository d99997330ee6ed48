#ifndef DCPCANON_EXPR_HPP
#define DCPCANON_EXPR_HPP

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dcpcanon {

// Operators and atoms an expression node can apply. Pow carries an integer
// exponent on the node; all others are determined by the Op alone.
enum class Op { Add, Sub, Neg, Mul, Div, Pow, Exp, Log, Sqrt, Abs };

std::string_view op_name(Op op);
std::size_t op_arity(Op op);

/// Immutable expression tree with value semantics. Copies share nodes.
class Expr {
 public:
  enum class Kind { Constant, Parameter, Variable, Apply };

  static Expr constant(double value);
  static Expr parameter(std::string name);
  static Expr variable(std::string name);
  /// Throws Error(InvalidProblem) when the child count does not match the
  /// operator's arity or a Pow exponent is below 1.
  static Expr apply(Op op, std::vector<Expr> args, int exponent = 0);

  Kind kind() const;
  double value() const;                // Constant only
  const std::string& name() const;     // Parameter / Variable only
  Op op() const;                       // Apply only
  int exponent() const;                // Pow only
  std::span<const Expr> args() const;  // empty for leaves

  bool is_constant() const { return kind() == Kind::Constant; }
  bool is_apply() const { return kind() == Kind::Apply; }
  bool is_apply(Op op) const { return is_apply() && this->op() == op; }

  /// Subterm reached by following child indices; throws Error(InvalidPath).
  const Expr& at(std::span<const std::size_t> path) const;
  /// Copy with the subterm at `path` replaced.
  Expr replace_at(std::span<const std::size_t> path, const Expr& replacement) const;
  /// Copy with every subterm structurally equal to `target` replaced.
  Expr replace_all(const Expr& target, const Expr& replacement) const;

  bool references(std::string_view name) const;
  /// Visits every node in post-order (children left to right, then parent)
  /// along with its child-index path.
  void visit_postorder(
      const std::function<void(const Expr&, const std::vector<std::size_t>&)>& fn) const;

  friend bool operator==(const Expr& a, const Expr& b);
  friend bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }

 private:
  struct Node;
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

// Builders for code and tests that assemble trees directly.
Expr add(Expr a, Expr b);
Expr sub(Expr a, Expr b);
Expr neg(Expr a);
Expr mul(Expr a, Expr b);
Expr div(Expr a, Expr b);
Expr pow(Expr a, int exponent);
Expr exp(Expr a);
Expr log(Expr a);
Expr sqrt(Expr a);
Expr abs(Expr a);

}  // namespace dcpcanon

#endif  // DCPCANON_EXPR_HPP
