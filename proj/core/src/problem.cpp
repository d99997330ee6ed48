#include "dcpcanon/problem.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "dcpcanon/atoms.hpp"
#include "dcpcanon/error.hpp"

namespace dcpcanon {

std::string_view comparator_symbol(Comparator cmp) {
  switch (cmp) {
    case Comparator::Le: return "<=";
    case Comparator::Lt: return "<";
    case Comparator::Eq: return "=";
    case Comparator::Ge: return ">=";
    case Comparator::Gt: return ">";
  }
  return "?";
}

bool is_strict(Comparator cmp) { return cmp == Comparator::Lt || cmp == Comparator::Gt; }

Constraint oriented(const Constraint& c) {
  if (c.cmp == Comparator::Ge) return {c.rhs, Comparator::Le, c.lhs};
  if (c.cmp == Comparator::Gt) return {c.rhs, Comparator::Lt, c.lhs};
  return c;
}

std::string_view sign_attr_name(SignAttr s) {
  switch (s) {
    case SignAttr::None: return "";
    case SignAttr::Nonneg: return "nonneg";
    case SignAttr::Pos: return "pos";
    case SignAttr::Nonpos: return "nonpos";
    case SignAttr::Neg: return "neg";
  }
  return "";
}

bool satisfies(SignAttr s, double value) {
  switch (s) {
    case SignAttr::None: return true;
    case SignAttr::Nonneg: return value >= 0.0;
    case SignAttr::Pos: return value > 0.0;
    case SignAttr::Nonpos: return value <= 0.0;
    case SignAttr::Neg: return value < 0.0;
  }
  return false;
}

bool Problem::has_variable(std::string_view name) const {
  return std::find(variables.begin(), variables.end(), name) != variables.end();
}

const ParamDecl* Problem::find_param(std::string_view name) const {
  for (const ParamDecl& p : params) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

namespace {

void CheckRefs(const Problem& p, const Expr& e, const std::string& where) {
  e.visit_postorder([&](const Expr& n, const std::vector<std::size_t>&) {
    if (n.kind() == Expr::Kind::Variable && !p.has_variable(n.name())) {
      throw Error(ErrorKind::InvalidProblem, where + ": undeclared variable " + n.name());
    }
    if (n.kind() == Expr::Kind::Parameter && p.find_param(n.name()) == nullptr) {
      throw Error(ErrorKind::InvalidProblem, where + ": undeclared parameter " + n.name());
    }
  });
}

}  // namespace

void Problem::validate() const {
  std::set<std::string, std::less<>> names;
  for (const std::string& v : variables) {
    if (!names.insert(v).second) {
      throw Error(ErrorKind::InvalidProblem, "duplicate declaration of " + v);
    }
  }
  for (const ParamDecl& pd : params) {
    if (!names.insert(pd.name).second) {
      throw Error(ErrorKind::InvalidProblem, "duplicate declaration of " + pd.name);
    }
  }
  CheckRefs(*this, objective, "objective");
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    CheckRefs(*this, constraints[i].lhs, "constraint #" + std::to_string(i));
    CheckRefs(*this, constraints[i].rhs, "constraint #" + std::to_string(i));
  }
}

double eval(const Expr& e, const Assignment& point) {
  switch (e.kind()) {
    case Expr::Kind::Constant: return e.value();
    case Expr::Kind::Parameter:
    case Expr::Kind::Variable: {
      auto it = point.find(e.name());
      if (it == point.end()) throw Error(ErrorKind::UnboundName, e.name());
      return it->second;
    }
    case Expr::Kind::Apply: {
      double vals[2] = {0.0, 0.0};
      auto args = e.args();
      for (std::size_t i = 0; i < args.size(); ++i) vals[i] = eval(args[i], point);
      return apply_op(e.op(), e.exponent(), std::span<const double>(vals, args.size()));
    }
  }
  return 0.0;
}

double residual(const Constraint& c, const Assignment& point) {
  const double l = eval(c.lhs, point);
  const double r = eval(c.rhs, point);
  switch (c.cmp) {
    case Comparator::Le:
    case Comparator::Lt: return std::max(0.0, l - r);
    case Comparator::Ge:
    case Comparator::Gt: return std::max(0.0, r - l);
    case Comparator::Eq: return std::fabs(l - r);
  }
  return 0.0;
}

bool holds(const Constraint& c, const Assignment& point, double tol) {
  const double l = eval(c.lhs, point);
  const double r = eval(c.rhs, point);
  switch (c.cmp) {
    case Comparator::Le: return l <= r + tol;
    case Comparator::Lt: return l < r;
    case Comparator::Eq: return std::fabs(l - r) <= tol;
    case Comparator::Ge: return l + tol >= r;
    case Comparator::Gt: return l > r;
  }
  return false;
}

FeasibilityVerdict check_feasible(const Problem& p, const Assignment& point, double tol) {
  FeasibilityVerdict v;
  for (std::size_t i = 0; i < p.constraints.size(); ++i) {
    try {
      if (!holds(p.constraints[i], point, tol)) {
        v.status = FeasibilityVerdict::Status::Violated;
        v.constraint = i;
        v.residual = residual(p.constraints[i], point);
        return v;
      }
    } catch (const DomainError& err) {
      v.status = FeasibilityVerdict::Status::DomainError;
      v.constraint = i;
      v.atom = err.atom();
      v.argument = err.argument();
      return v;
    }
  }
  return v;
}

double objective_value(const Problem& p, const Assignment& point) {
  return eval(p.objective, point);
}

Problem to_feasibility(const Problem& p) {
  Problem q = p;
  q.objective = Expr::constant(0.0);
  return q;
}

Problem bound_problem(const Problem& p, double bound) {
  Problem q = to_feasibility(p);
  q.constraints.push_back({p.objective, Comparator::Le, Expr::constant(bound)});
  return q;
}

void check_params_bound(const Problem& p, const Assignment& params) {
  for (const ParamDecl& pd : p.params) {
    auto it = params.find(pd.name);
    if (it == params.end()) throw Error(ErrorKind::UnboundParameter, "unbound parameter " + pd.name);
    if (!std::isfinite(it->second)) {
      throw Error(ErrorKind::UnboundParameter, "parameter " + pd.name + " is not finite");
    }
    if (!satisfies(pd.sign, it->second)) {
      std::ostringstream os;
      os << pd.name << " = " << it->second << " violates " << sign_attr_name(pd.sign);
      throw Error(ErrorKind::SignViolation, os.str());
    }
  }
}

Assignment merged(const Assignment& a, const Assignment& b) {
  Assignment out = a;
  for (const auto& [k, v] : b) out[k] = v;
  return out;
}

}  // namespace dcpcanon
