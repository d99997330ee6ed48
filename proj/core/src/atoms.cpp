#include "dcpcanon/atoms.hpp"

#include <cmath>
#include <memory>
#include <string>

#include "dcpcanon/error.hpp"

namespace dcpcanon {

std::string_view curvature_name(Curvature c) {
  switch (c) {
    case Curvature::Constant: return "constant";
    case Curvature::Affine: return "affine";
    case Curvature::Convex: return "convex";
    case Curvature::Concave: return "concave";
    case Curvature::Unknown: return "unknown";
  }
  return "unknown";
}

bool is_affine(Curvature c) { return c == Curvature::Constant || c == Curvature::Affine; }
bool is_convex(Curvature c) { return is_affine(c) || c == Curvature::Convex; }
bool is_concave(Curvature c) { return is_affine(c) || c == Curvature::Concave; }

Curvature negate(Curvature c) {
  if (c == Curvature::Convex) return Curvature::Concave;
  if (c == Curvature::Concave) return Curvature::Convex;
  return c;
}

std::string_view sign_name(Sign s) {
  switch (s) {
    case Sign::Unknown: return "unknown";
    case Sign::Nonneg: return "nonneg";
    case Sign::Nonpos: return "nonpos";
    case Sign::Zero: return "zero";
  }
  return "unknown";
}

bool is_nonneg(Sign s) { return s == Sign::Nonneg || s == Sign::Zero; }
bool is_nonpos(Sign s) { return s == Sign::Nonpos || s == Sign::Zero; }

Sign sign_of(double v) {
  if (v == 0.0) return Sign::Zero;
  if (v > 0.0) return Sign::Nonneg;
  if (v < 0.0) return Sign::Nonpos;
  return Sign::Unknown;  // NaN
}

Sign sign_of(SignAttr s) {
  switch (s) {
    case SignAttr::Nonneg:
    case SignAttr::Pos: return Sign::Nonneg;
    case SignAttr::Nonpos:
    case SignAttr::Neg: return Sign::Nonpos;
    case SignAttr::None: return Sign::Unknown;
  }
  return Sign::Unknown;
}

Sign negate(Sign s) {
  if (s == Sign::Nonneg) return Sign::Nonpos;
  if (s == Sign::Nonpos) return Sign::Nonneg;
  return s;
}

Sign sign_sum(Sign a, Sign b) {
  if (a == Sign::Zero) return b;
  if (b == Sign::Zero) return a;
  if (is_nonneg(a) && is_nonneg(b)) return Sign::Nonneg;
  if (is_nonpos(a) && is_nonpos(b)) return Sign::Nonpos;
  return Sign::Unknown;
}

Sign sign_product(Sign a, Sign b) {
  if (a == Sign::Zero || b == Sign::Zero) return Sign::Zero;
  if (a == Sign::Unknown || b == Sign::Unknown) return Sign::Unknown;
  return a == b ? Sign::Nonneg : Sign::Nonpos;
}

std::string_view monotonicity_name(Monotonicity m) {
  switch (m) {
    case Monotonicity::Nondecreasing: return "nondecreasing";
    case Monotonicity::Nonincreasing: return "nonincreasing";
    case Monotonicity::None: return "none";
  }
  return "none";
}

double apply_op(Op op, int exponent, std::span<const double> a) {
  switch (op) {
    case Op::Add: return a[0] + a[1];
    case Op::Sub: return a[0] - a[1];
    case Op::Neg: return -a[0];
    case Op::Mul: return a[0] * a[1];
    case Op::Div:
      if (a[1] == 0.0) throw DomainError("div", a[1]);
      return a[0] / a[1];
    case Op::Pow: {
      double r = 1.0;
      for (int i = 0; i < exponent; ++i) r *= a[0];
      return r;
    }
    case Op::Exp: return std::exp(a[0]);
    case Op::Log:
      if (!(a[0] > 0.0)) throw DomainError("log", a[0]);
      return std::log(a[0]);
    case Op::Sqrt:
      if (!(a[0] >= 0.0)) throw DomainError("sqrt", a[0]);
      return std::sqrt(a[0]);
    case Op::Abs: return std::fabs(a[0]);
  }
  return 0.0;
}

namespace {

using M = Monotonicity;

// Monotonicity of |u| or u^(2k): increasing on u >= 0, decreasing on u <= 0.
M EvenMonotonicity(Sign s) {
  if (is_nonneg(s)) return M::Nondecreasing;
  if (is_nonpos(s)) return M::Nonincreasing;
  return M::None;
}

M ScaleMonotonicity(Sign factor) {
  if (is_nonneg(factor)) return M::Nondecreasing;
  if (is_nonpos(factor)) return M::Nonincreasing;
  return M::None;
}

AtomSig MakeSig(Op op, int exponent) {
  AtomSig s;
  s.op = op;
  s.exponent = exponent;
  s.arity = op_arity(op);
  s.name = atom_name(op, exponent);
  s.in_domain = [](std::span<const double>) { return true; };
  s.evaluate = [op, exponent](std::span<const double> a) { return apply_op(op, exponent, a); };
  auto fixed = [](Curvature c) { return [c](std::span<const Sign>) { return c; }; };
  switch (op) {
    case Op::Add:
      s.curvature = fixed(Curvature::Affine);
      s.monotonicity = [](std::size_t, std::span<const Sign>) { return M::Nondecreasing; };
      s.sign = [](std::span<const Sign> a) { return sign_sum(a[0], a[1]); };
      break;
    case Op::Sub:
      s.curvature = fixed(Curvature::Affine);
      s.monotonicity = [](std::size_t i, std::span<const Sign>) {
        return i == 0 ? M::Nondecreasing : M::Nonincreasing;
      };
      s.sign = [](std::span<const Sign> a) { return sign_sum(a[0], negate(a[1])); };
      break;
    case Op::Neg:
      s.curvature = fixed(Curvature::Affine);
      s.monotonicity = [](std::size_t, std::span<const Sign>) { return M::Nonincreasing; };
      s.sign = [](std::span<const Sign> a) { return negate(a[0]); };
      break;
    case Op::Mul:
      s.curvature = fixed(Curvature::Affine);
      s.factor_rule = AtomSig::FactorRule::EitherConstant;
      s.monotonicity = [](std::size_t i, std::span<const Sign> a) {
        return ScaleMonotonicity(a[1 - i]);
      };
      s.sign = [](std::span<const Sign> a) { return sign_product(a[0], a[1]); };
      break;
    case Op::Div:
      s.curvature = fixed(Curvature::Affine);
      s.factor_rule = AtomSig::FactorRule::RightConstant;
      s.monotonicity = [](std::size_t i, std::span<const Sign> a) {
        return i == 0 ? ScaleMonotonicity(a[1]) : M::None;
      };
      s.sign = [](std::span<const Sign> a) { return sign_product(a[0], a[1]); };
      s.in_domain = [](std::span<const double> a) { return a[1] != 0.0; };
      break;
    case Op::Pow:
      if (exponent == 1) {
        s.curvature = fixed(Curvature::Affine);
        s.monotonicity = [](std::size_t, std::span<const Sign>) { return M::Nondecreasing; };
        s.sign = [](std::span<const Sign> a) { return a[0]; };
      } else if (exponent % 2 == 0) {
        s.curvature = fixed(Curvature::Convex);
        s.monotonicity = [](std::size_t, std::span<const Sign> a) {
          return EvenMonotonicity(a[0]);
        };
        s.sign = [](std::span<const Sign> a) {
          return a[0] == Sign::Zero ? Sign::Zero : Sign::Nonneg;
        };
      } else {
        // Odd powers are convex on u >= 0 and concave on u <= 0.
        s.curvature = [](std::span<const Sign> a) {
          if (is_nonneg(a[0])) return Curvature::Convex;
          if (is_nonpos(a[0])) return Curvature::Concave;
          return Curvature::Unknown;
        };
        s.monotonicity = [](std::size_t, std::span<const Sign>) { return M::Nondecreasing; };
        s.sign = [](std::span<const Sign> a) { return a[0]; };
      }
      break;
    case Op::Exp:
      s.curvature = fixed(Curvature::Convex);
      s.monotonicity = [](std::size_t, std::span<const Sign>) { return M::Nondecreasing; };
      s.sign = [](std::span<const Sign>) { return Sign::Nonneg; };
      break;
    case Op::Log:
      s.curvature = fixed(Curvature::Concave);
      s.monotonicity = [](std::size_t, std::span<const Sign>) { return M::Nondecreasing; };
      s.sign = [](std::span<const Sign>) { return Sign::Unknown; };
      s.in_domain = [](std::span<const double> a) { return a[0] > 0.0; };
      break;
    case Op::Sqrt:
      s.curvature = fixed(Curvature::Concave);
      s.monotonicity = [](std::size_t, std::span<const Sign>) { return M::Nondecreasing; };
      s.sign = [](std::span<const Sign> a) {
        return a[0] == Sign::Zero ? Sign::Zero : Sign::Nonneg;
      };
      s.in_domain = [](std::span<const double> a) { return a[0] >= 0.0; };
      break;
    case Op::Abs:
      s.curvature = fixed(Curvature::Convex);
      s.monotonicity = [](std::size_t, std::span<const Sign> a) {
        return EvenMonotonicity(a[0]);
      };
      s.sign = [](std::span<const Sign> a) {
        return a[0] == Sign::Zero ? Sign::Zero : Sign::Nonneg;
      };
      break;
  }
  return s;
}

const std::vector<AtomSig>& FixedRegistry() {
  static const std::vector<AtomSig> registry = [] {
    std::vector<AtomSig> r;
    for (Op op : {Op::Add, Op::Sub, Op::Neg, Op::Mul, Op::Div, Op::Exp, Op::Log, Op::Sqrt,
                  Op::Abs}) {
      r.push_back(MakeSig(op, 0));
    }
    for (int k = 1; k <= 8; ++k) r.push_back(MakeSig(Op::Pow, k));
    return r;
  }();
  return registry;
}

Constraint Le(Expr a, Expr b) { return {std::move(a), Comparator::Le, std::move(b)}; }
Constraint Lt(Expr a, Expr b) { return {std::move(a), Comparator::Lt, std::move(b)}; }

}  // namespace

std::string atom_name(Op op, int exponent) {
  if (op == Op::Pow) return "pow_" + std::to_string(exponent);
  return std::string(op_name(op));
}

const AtomSig& atom_for(Op op, int exponent) {
  const auto& reg = FixedRegistry();
  for (const AtomSig& s : reg) {
    if (s.op == op && (op != Op::Pow || s.exponent == exponent)) return s;
  }
  // Large exponents are built once and kept for the process lifetime.
  static thread_local std::vector<std::unique_ptr<AtomSig>> extra;
  for (const auto& s : extra) {
    if (s->exponent == exponent) return *s;
  }
  if (op != Op::Pow || exponent < 1) {
    throw Error(ErrorKind::InvalidProblem, "no atom for " + atom_name(op, exponent));
  }
  extra.push_back(std::make_unique<AtomSig>(MakeSig(op, exponent)));
  return *extra.back();
}

std::optional<AtomSig> atom_lookup(std::string_view name) {
  if (name.starts_with("pow_")) {
    std::string digits(name.substr(4));
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos) {
      return std::nullopt;
    }
    int k = std::stoi(digits);
    if (k < 1) return std::nullopt;
    return atom_for(Op::Pow, k);
  }
  for (const AtomSig& s : FixedRegistry()) {
    if (s.op != Op::Pow && s.name == name) return s;
  }
  return std::nullopt;
}

std::optional<GraphImplementation> graph_impl(Op op) {
  switch (op) {
    case Op::Sqrt:
      // sqrt(x) = max { t : t^2 <= x } for x >= 0.
      return GraphImplementation{
          "sqrt", Op::Sqrt, 0, GraphDirection::Greatest,
          [](const Expr& t, std::span<const Expr> a) {
            return std::vector<Constraint>{Le(pow(t, 2), a[0])};
          },
          [](std::span<const Expr> a) {
            return std::vector<Constraint>{Le(Expr::constant(0.0), a[0])};
          }};
    case Op::Log:
      // log(x) = max { t : exp(t) <= x } for x > 0.
      return GraphImplementation{
          "log", Op::Log, 0, GraphDirection::Greatest,
          [](const Expr& t, std::span<const Expr> a) {
            return std::vector<Constraint>{Le(exp(t), a[0])};
          },
          [](std::span<const Expr> a) {
            return std::vector<Constraint>{Lt(Expr::constant(0.0), a[0])};
          }};
    case Op::Abs:
      // |x| = min { t : x <= t, -x <= t }.
      return GraphImplementation{
          "abs", Op::Abs, 0, GraphDirection::Least,
          [](const Expr& t, std::span<const Expr> a) {
            return std::vector<Constraint>{Le(a[0], t), Le(neg(a[0]), t)};
          },
          [](std::span<const Expr>) { return std::vector<Constraint>{}; }};
    default:
      return std::nullopt;
  }
}

std::optional<GraphImplementation> graph_impl(std::string_view name) {
  for (Op op : {Op::Sqrt, Op::Log, Op::Abs}) {
    if (op_name(op) == name) return graph_impl(op);
  }
  return std::nullopt;
}

GraphImplementation trivial_graph_impl(Op op, int exponent, GraphDirection direction) {
  GraphImplementation gi;
  gi.atom = atom_name(op, exponent);
  gi.op = op;
  gi.exponent = exponent;
  gi.direction = direction;
  gi.constraints = [op, exponent, direction](const Expr& t, std::span<const Expr> a) {
    Expr f = Expr::apply(op, std::vector<Expr>(a.begin(), a.end()), exponent);
    return direction == GraphDirection::Greatest ? std::vector<Constraint>{Le(t, f)}
                                                 : std::vector<Constraint>{Le(f, t)};
  };
  gi.domain_facts = [](std::span<const Expr>) { return std::vector<Constraint>{}; };
  return gi;
}

IsGreatestVerdict check_is_greatest(const GraphImplementation& gi, std::span<const double> args,
                                    const GridSweep& grid) {
  constexpr double kTol = 1e-9;
  const AtomSig& sig = atom_for(gi.op, gi.exponent);
  if (!sig.in_domain(args)) {
    throw DomainError(sig.name, args.empty() ? 0.0 : args[0]);
  }
  IsGreatestVerdict v;
  v.value = sig.evaluate(args);

  std::vector<Expr> arg_exprs;
  for (double a : args) arg_exprs.push_back(Expr::constant(a));
  const std::vector<Constraint> cons = gi.constraints(Expr::variable("t"), arg_exprs);
  Assignment pt;
  auto satisfied = [&](double t, double tol) {
    pt["t"] = t;
    for (const Constraint& c : cons) {
      try {
        if (!holds(c, pt, tol)) return false;
      } catch (const DomainError&) {
        return false;
      }
    }
    return true;
  };

  if (!satisfied(v.value, kTol)) {
    v.reason = "described value does not satisfy the implementation constraints";
    return v;
  }
  const bool greatest = gi.direction == GraphDirection::Greatest;
  const auto steps = static_cast<long>(std::floor((grid.hi - grid.lo) / grid.step + 0.5));
  for (long i = 0; i <= steps; ++i) {
    const double y = grid.lo + static_cast<double>(i) * grid.step;
    if (!satisfied(y, 0.0)) continue;
    const double excess = greatest ? y - v.value : v.value - y;
    if (excess > v.violation) v.violation = excess;
  }
  if (v.violation > kTol) {
    v.reason = greatest ? "a grid point satisfying the constraints exceeds the value"
                        : "a grid point satisfying the constraints lies below the value";
    return v;
  }
  v.confirmed = true;
  return v;
}

}  // namespace dcpcanon
