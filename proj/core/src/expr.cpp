#include "dcpcanon/expr.hpp"

#include "dcpcanon/error.hpp"

namespace dcpcanon {

struct Expr::Node {
  Kind kind;
  double value = 0.0;
  std::string name;
  Op op = Op::Add;
  int exponent = 0;
  std::vector<Expr> args;
};

std::string_view op_name(Op op) {
  switch (op) {
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Neg: return "neg";
    case Op::Mul: return "mul";
    case Op::Div: return "div";
    case Op::Pow: return "pow";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sqrt: return "sqrt";
    case Op::Abs: return "abs";
  }
  return "?";
}

std::size_t op_arity(Op op) {
  switch (op) {
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
      return 2;
    default:
      return 1;
  }
}

Expr Expr::constant(double value) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Constant;
  n->value = value;
  return Expr(std::move(n));
}

Expr Expr::parameter(std::string name) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Parameter;
  n->name = std::move(name);
  return Expr(std::move(n));
}

Expr Expr::variable(std::string name) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Variable;
  n->name = std::move(name);
  return Expr(std::move(n));
}

Expr Expr::apply(Op op, std::vector<Expr> args, int exponent) {
  if (args.size() != op_arity(op)) {
    throw Error(ErrorKind::InvalidProblem, std::string(op_name(op)) + " expects " +
                                               std::to_string(op_arity(op)) + " argument(s), got " +
                                               std::to_string(args.size()));
  }
  if (op == Op::Pow && exponent < 1) {
    throw Error(ErrorKind::InvalidProblem,
                "pow exponent must be an integer >= 1, got " + std::to_string(exponent));
  }
  auto n = std::make_shared<Node>();
  n->kind = Kind::Apply;
  n->op = op;
  n->exponent = op == Op::Pow ? exponent : 0;
  n->args = std::move(args);
  return Expr(std::move(n));
}

Expr::Kind Expr::kind() const { return node_->kind; }
double Expr::value() const { return node_->value; }
const std::string& Expr::name() const { return node_->name; }
Op Expr::op() const { return node_->op; }
int Expr::exponent() const { return node_->exponent; }
std::span<const Expr> Expr::args() const { return node_->args; }

const Expr& Expr::at(std::span<const std::size_t> path) const {
  const Expr* cur = this;
  for (std::size_t i : path) {
    if (i >= cur->args().size()) {
      throw Error(ErrorKind::InvalidPath, "child index " + std::to_string(i) + " out of range");
    }
    cur = &cur->args()[i];
  }
  return *cur;
}

Expr Expr::replace_at(std::span<const std::size_t> path, const Expr& replacement) const {
  if (path.empty()) return replacement;
  if (path.front() >= args().size()) {
    throw Error(ErrorKind::InvalidPath,
                "child index " + std::to_string(path.front()) + " out of range");
  }
  std::vector<Expr> children(args().begin(), args().end());
  children[path.front()] = children[path.front()].replace_at(path.subspan(1), replacement);
  return apply(op(), std::move(children), exponent());
}

Expr Expr::replace_all(const Expr& target, const Expr& replacement) const {
  if (*this == target) return replacement;
  if (!is_apply()) return *this;
  std::vector<Expr> children;
  children.reserve(args().size());
  bool changed = false;
  for (const Expr& a : args()) {
    children.push_back(a.replace_all(target, replacement));
    changed = changed || children.back().node_ != a.node_;
  }
  if (!changed) return *this;
  return apply(op(), std::move(children), exponent());
}

bool Expr::references(std::string_view name) const {
  switch (kind()) {
    case Kind::Constant: return false;
    case Kind::Parameter:
    case Kind::Variable: return this->name() == name;
    case Kind::Apply:
      for (const Expr& a : args()) {
        if (a.references(name)) return true;
      }
      return false;
  }
  return false;
}

namespace {
void VisitImpl(const Expr& e, std::vector<std::size_t>& path,
               const std::function<void(const Expr&, const std::vector<std::size_t>&)>& fn) {
  for (std::size_t i = 0; i < e.args().size(); ++i) {
    path.push_back(i);
    VisitImpl(e.args()[i], path, fn);
    path.pop_back();
  }
  fn(e, path);
}
}  // namespace

void Expr::visit_postorder(
    const std::function<void(const Expr&, const std::vector<std::size_t>&)>& fn) const {
  std::vector<std::size_t> path;
  VisitImpl(*this, path, fn);
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.node_ == b.node_) return true;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case Expr::Kind::Constant: return a.value() == b.value();
    case Expr::Kind::Parameter:
    case Expr::Kind::Variable: return a.name() == b.name();
    case Expr::Kind::Apply: {
      if (a.op() != b.op() || a.exponent() != b.exponent()) return false;
      auto aa = a.args();
      auto ba = b.args();
      for (std::size_t i = 0; i < aa.size(); ++i) {
        if (aa[i] != ba[i]) return false;
      }
      return true;
    }
  }
  return false;
}

Expr add(Expr a, Expr b) { return Expr::apply(Op::Add, {std::move(a), std::move(b)}); }
Expr sub(Expr a, Expr b) { return Expr::apply(Op::Sub, {std::move(a), std::move(b)}); }
Expr neg(Expr a) { return Expr::apply(Op::Neg, {std::move(a)}); }
Expr mul(Expr a, Expr b) { return Expr::apply(Op::Mul, {std::move(a), std::move(b)}); }
Expr div(Expr a, Expr b) { return Expr::apply(Op::Div, {std::move(a), std::move(b)}); }
Expr pow(Expr a, int exponent) { return Expr::apply(Op::Pow, {std::move(a)}, exponent); }
Expr exp(Expr a) { return Expr::apply(Op::Exp, {std::move(a)}); }
Expr log(Expr a) { return Expr::apply(Op::Log, {std::move(a)}); }
Expr sqrt(Expr a) { return Expr::apply(Op::Sqrt, {std::move(a)}); }
Expr abs(Expr a) { return Expr::apply(Op::Abs, {std::move(a)}); }

}  // namespace dcpcanon
