#include "dcpcanon/dcp.hpp"

#include <charconv>

#include "dcpcanon/dsl.hpp"
#include "dcpcanon/error.hpp"

namespace dcpcanon {

OccurrencePath OccurrencePath::parse(std::string_view text) {
  OccurrencePath p;
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t slash = text.find('/', start);
    parts.push_back(text.substr(start, slash == std::string_view::npos ? slash : slash - start));
    if (slash == std::string_view::npos) break;
    start = slash + 1;
  }
  auto bad = [&](const std::string& why) {
    return Error(ErrorKind::InvalidPath, "'" + std::string(text) + "': " + why);
  };
  auto number = [&](std::string_view s) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
      throw bad("expected an index, got '" + std::string(s) + "'");
    }
    return v;
  };
  std::size_t next = 1;
  if (parts[0] == "obj") {
    p.root = Root::Objective;
  } else if (parts[0].size() > 1 && parts[0][0] == 'c') {
    p.root = Root::Constraint;
    p.constraint = number(parts[0].substr(1));
    if (parts.size() < 2) throw bad("missing side (lhs or rhs)");
    if (parts[1] == "lhs") {
      p.side = Side::Lhs;
    } else if (parts[1] == "rhs") {
      p.side = Side::Rhs;
    } else {
      throw bad("side must be lhs or rhs");
    }
    next = 2;
  } else {
    throw bad("must start with c<index> or obj");
  }
  for (std::size_t i = next; i < parts.size(); ++i) p.children.push_back(number(parts[i]));
  return p;
}

std::string OccurrencePath::to_string() const {
  std::string s = root == Root::Objective
                      ? std::string("obj")
                      : "c" + std::to_string(constraint) + (side == Side::Lhs ? "/lhs" : "/rhs");
  for (std::size_t c : children) s += "/" + std::to_string(c);
  return s;
}

namespace {

const Expr& RootExpr(const Problem& p, const OccurrencePath& path) {
  if (path.root == OccurrencePath::Root::Objective) return p.objective;
  if (path.constraint >= p.constraints.size()) {
    throw Error(ErrorKind::InvalidPath, path.to_string() + ": no constraint #" +
                                            std::to_string(path.constraint));
  }
  const Constraint& c = p.constraints[path.constraint];
  return path.side == OccurrencePath::Side::Lhs ? c.lhs : c.rhs;
}

}  // namespace

const Expr& subterm(const Problem& p, const OccurrencePath& path) {
  try {
    return RootExpr(p, path).at(path.children);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::InvalidPath) throw;
    throw Error(ErrorKind::InvalidPath, path.to_string() + " does not name a subterm");
  }
}

std::string_view polarity_name(Polarity p) {
  switch (p) {
    case Polarity::Monotone: return "monotone";
    case Polarity::Antimonotone: return "antimonotone";
    case Polarity::Both: return "both";
    case Polarity::Unknown: return "unknown";
  }
  return "unknown";
}

Polarity flip(Polarity p) {
  if (p == Polarity::Monotone) return Polarity::Antimonotone;
  if (p == Polarity::Antimonotone) return Polarity::Monotone;
  return p;
}

SignContext sign_context(const Problem& p) {
  SignContext ctx;
  for (const ParamDecl& pd : p.params) ctx[pd.name] = sign_of(pd.sign);
  return ctx;
}

ExprInfo curvature_of(const Expr& e, const SignContext& signs) {
  switch (e.kind()) {
    case Expr::Kind::Constant: return {Curvature::Constant, sign_of(e.value())};
    case Expr::Kind::Parameter: {
      auto it = signs.find(e.name());
      return {Curvature::Constant, it == signs.end() ? Sign::Unknown : it->second};
    }
    case Expr::Kind::Variable: {
      auto it = signs.find(e.name());
      return {Curvature::Affine, it == signs.end() ? Sign::Unknown : it->second};
    }
    case Expr::Kind::Apply: break;
  }
  const AtomSig& sig = atom_for(e.op(), e.exponent());
  const auto args = e.args();
  std::vector<ExprInfo> info;
  std::vector<Sign> arg_signs;
  bool all_constant = true;
  bool all_affine = true;
  for (const Expr& a : args) {
    info.push_back(curvature_of(a, signs));
    arg_signs.push_back(info.back().sign);
    all_constant = all_constant && info.back().curvature == Curvature::Constant;
    all_affine = all_affine && is_affine(info.back().curvature);
  }
  ExprInfo out;
  out.sign = sig.sign(arg_signs);
  if (all_constant) {
    out.curvature = Curvature::Constant;
    return out;
  }
  using FR = AtomSig::FactorRule;
  if (sig.factor_rule == FR::EitherConstant && info[0].curvature != Curvature::Constant &&
      info[1].curvature != Curvature::Constant) {
    return out;  // bilinear
  }
  if (sig.factor_rule == FR::RightConstant && info[1].curvature != Curvature::Constant) {
    return out;
  }
  const Curvature f = sig.curvature(arg_signs);
  if (f == Curvature::Affine && all_affine) {
    out.curvature = Curvature::Affine;
    return out;
  }
  bool convex_ok = is_convex(f);
  bool concave_ok = is_concave(f);
  for (std::size_t i = 0; i < args.size(); ++i) {
    const Curvature c = info[i].curvature;
    if (is_affine(c)) continue;
    const Monotonicity m = sig.monotonicity(i, arg_signs);
    convex_ok = convex_ok && ((m == Monotonicity::Nondecreasing && is_convex(c)) ||
                              (m == Monotonicity::Nonincreasing && is_concave(c)));
    concave_ok = concave_ok && ((m == Monotonicity::Nondecreasing && is_concave(c)) ||
                                (m == Monotonicity::Nonincreasing && is_convex(c)));
  }
  if (convex_ok && concave_ok) {
    out.curvature = Curvature::Affine;
  } else if (convex_ok) {
    out.curvature = Curvature::Convex;
  } else if (concave_ok) {
    out.curvature = Curvature::Concave;
  }
  return out;
}

namespace {

Polarity RootPolarity(const Problem& p, const OccurrencePath& path, const SignContext& signs) {
  if (path.root == OccurrencePath::Root::Objective) return Polarity::Antimonotone;
  const Constraint& c = p.constraints[path.constraint];
  const bool lhs = path.side == OccurrencePath::Side::Lhs;
  switch (c.cmp) {
    case Comparator::Le:
    case Comparator::Lt: return lhs ? Polarity::Antimonotone : Polarity::Monotone;
    case Comparator::Ge:
    case Comparator::Gt: return lhs ? Polarity::Monotone : Polarity::Antimonotone;
    case Comparator::Eq: {
      const Expr& side = lhs ? c.lhs : c.rhs;
      if (path.children.empty() && is_affine(curvature_of(side, signs).curvature)) {
        return Polarity::Both;
      }
      return Polarity::Unknown;
    }
  }
  return Polarity::Unknown;
}

Polarity Descend(const Expr& parent, std::size_t child, Polarity pol, const SignContext& signs) {
  if (pol == Polarity::Unknown || pol == Polarity::Both) return Polarity::Unknown;
  const AtomSig& sig = atom_for(parent.op(), parent.exponent());
  std::vector<Sign> arg_signs;
  for (const Expr& a : parent.args()) arg_signs.push_back(curvature_of(a, signs).sign);
  switch (sig.monotonicity(child, arg_signs)) {
    case Monotonicity::Nondecreasing: return pol;
    case Monotonicity::Nonincreasing: return flip(pol);
    case Monotonicity::None: return Polarity::Unknown;
  }
  return Polarity::Unknown;
}

void CollectOccurrences(const Expr& e, const Expr& target, OccurrencePath& path, Polarity pol,
                        const SignContext& signs, std::vector<Occurrence>& out) {
  if (e == target) {
    out.push_back({path, pol});
    return;
  }
  for (std::size_t i = 0; i < e.args().size(); ++i) {
    path.children.push_back(i);
    CollectOccurrences(e.args()[i], target, path, Descend(e, i, pol, signs), signs, out);
    path.children.pop_back();
  }
}

}  // namespace

Polarity polarity_of(const Problem& p, const OccurrencePath& path) {
  const Expr& root = RootExpr(p, path);
  root.at(path.children);  // validates the path
  const SignContext signs = sign_context(p);
  Polarity pol = RootPolarity(p, path, signs);
  const Expr* cur = &root;
  for (std::size_t i : path.children) {
    pol = Descend(*cur, i, pol, signs);
    cur = &cur->args()[i];
  }
  return pol;
}

std::vector<Occurrence> find_occurrences(const Problem& p, const Expr& target) {
  const SignContext signs = sign_context(p);
  std::vector<Occurrence> out;
  for (std::size_t i = 0; i < p.constraints.size(); ++i) {
    for (auto side : {OccurrencePath::Side::Lhs, OccurrencePath::Side::Rhs}) {
      OccurrencePath path;
      path.constraint = i;
      path.side = side;
      const Constraint& c = p.constraints[i];
      const Expr& root = side == OccurrencePath::Side::Lhs ? c.lhs : c.rhs;
      CollectOccurrences(root, target, path, RootPolarity(p, path, signs), signs, out);
    }
  }
  return out;
}

namespace {

bool Satisfies(Curvature got, Curvature required) {
  switch (required) {
    case Curvature::Convex: return is_convex(got);
    case Curvature::Concave: return is_concave(got);
    case Curvature::Affine:
    case Curvature::Constant: return is_affine(got);
    case Curvature::Unknown: return true;
  }
  return false;
}

// Walks down to the node where the composition rules first break.
// A known but wrong curvature is reported at the side itself.
void FindFailure(const Expr& e, const SignContext& signs, std::vector<std::size_t>& path) {
  if (curvature_of(e, signs).curvature != Curvature::Unknown) return;
  for (std::size_t i = 0; i < e.args().size(); ++i) {
    if (curvature_of(e.args()[i], signs).curvature == Curvature::Unknown) {
      path.push_back(i);
      FindFailure(e.args()[i], signs, path);
      return;
    }
  }
}

}  // namespace

DcpVerdict dcp_check(const Problem& p) {
  const SignContext signs = sign_context(p);
  DcpVerdict v;
  v.objective_curvature = curvature_of(p.objective, signs).curvature;
  if (!is_convex(v.objective_curvature)) {
    v.objective_ok = false;
    v.conformant = false;
    v.objective_message = "objective: required convex, got " +
                          std::string(curvature_name(v.objective_curvature));
  }
  for (std::size_t i = 0; i < p.constraints.size(); ++i) {
    const Constraint& c = p.constraints[i];
    Curvature need_lhs = Curvature::Affine;
    Curvature need_rhs = Curvature::Affine;
    if (c.cmp == Comparator::Le || c.cmp == Comparator::Lt) {
      need_lhs = Curvature::Convex;
      need_rhs = Curvature::Concave;
    } else if (c.cmp == Comparator::Ge || c.cmp == Comparator::Gt) {
      need_lhs = Curvature::Concave;
      need_rhs = Curvature::Convex;
    }
    const ExprInfo li = curvature_of(c.lhs, signs);
    const ExprInfo ri = curvature_of(c.rhs, signs);
    v.lhs_info.push_back(li);
    v.rhs_info.push_back(ri);
    ConstraintDiagnosis d;
    d.constraint = i;
    d.failing.constraint = i;
    auto diagnose = [&](OccurrencePath::Side side, const Expr& e, const ExprInfo& info,
                        Curvature need) {
      d.ok = false;
      d.side = side;
      d.required = need;
      d.inferred = info.curvature;
      d.failing.side = side;
      FindFailure(e, signs, d.failing.children);
      d.message = "constraint #" + std::to_string(i) + ": required " +
                  std::string(curvature_name(need)) + ", got " +
                  std::string(curvature_name(info.curvature)) + " at " +
                  print(e.at(d.failing.children));
    };
    if (!Satisfies(li.curvature, need_lhs)) {
      diagnose(OccurrencePath::Side::Lhs, c.lhs, li, need_lhs);
    } else if (!Satisfies(ri.curvature, need_rhs)) {
      diagnose(OccurrencePath::Side::Rhs, c.rhs, ri, need_rhs);
    } else {
      d.required = need_lhs;
      d.inferred = li.curvature;
    }
    if (!d.ok) v.conformant = false;
    v.constraints.push_back(std::move(d));
  }
  return v;
}

}  // namespace dcpcanon
