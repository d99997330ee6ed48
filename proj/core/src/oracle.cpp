#include "dcpcanon/oracle.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

#include "dcpcanon/conic.hpp"
#include "dcpcanon/dsl.hpp"
#include "dcpcanon/error.hpp"

namespace dcpcanon {

SearchBox SearchBox::uniform(const std::vector<std::string>& vars, Range r,
                             std::size_t resolution) {
  SearchBox box;
  for (const std::string& v : vars) box.ranges[v] = r;
  box.resolution = resolution;
  return box;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Postfix program for one expression with parameters folded to constants.

struct Inst {
  enum class Code { Const, Slot, Apply } code;
  Op op = Op::Add;
  int exponent = 0;
  double value = 0.0;
  std::size_t slot = 0;
};

struct Tape {
  std::vector<Inst> code;
};

Tape Compile(const Expr& e, const std::vector<std::string>& vars, const Assignment& params) {
  Tape t;
  e.visit_postorder([&](const Expr& node, const std::vector<std::size_t>&) {
    switch (node.kind()) {
      case Expr::Kind::Constant:
        t.code.push_back({Inst::Code::Const, Op::Add, 0, node.value(), 0});
        break;
      case Expr::Kind::Parameter: {
        auto it = params.find(node.name());
        if (it == params.end()) throw Error(ErrorKind::UnboundParameter, "unbound parameter " + node.name());
        t.code.push_back({Inst::Code::Const, Op::Add, 0, it->second, 0});
        break;
      }
      case Expr::Kind::Variable: {
        auto it = std::find(vars.begin(), vars.end(), node.name());
        if (it == vars.end()) throw Error(ErrorKind::UnboundName, node.name());
        t.code.push_back({Inst::Code::Slot, Op::Add, 0, 0.0,
                          static_cast<std::size_t>(it - vars.begin())});
        break;
      }
      case Expr::Kind::Apply:
        t.code.push_back({Inst::Code::Apply, node.op(), node.exponent(), 0.0, 0});
        break;
    }
  });
  return t;
}

// Mirrors apply_op exactly, reporting domain errors through `ok`.
inline double ApplyPoint(Op op, int exponent, double a, double b, bool& ok) {
  switch (op) {
    case Op::Add: return a + b;
    case Op::Sub: return a - b;
    case Op::Neg: return -a;
    case Op::Mul: return a * b;
    case Op::Div:
      if (b == 0.0) ok = false;
      return a / b;
    case Op::Pow: {
      double r = 1.0;
      for (int i = 0; i < exponent; ++i) r *= a;
      return r;
    }
    case Op::Exp: return std::exp(a);
    case Op::Log:
      if (!(a > 0.0)) ok = false;
      return ok ? std::log(a) : 0.0;
    case Op::Sqrt:
      if (!(a >= 0.0)) ok = false;
      return ok ? std::sqrt(a) : 0.0;
    case Op::Abs: return std::fabs(a);
  }
  return 0.0;
}

bool EvalPoint(const Tape& t, const double* slots, std::vector<double>& stack, double& out) {
  stack.clear();
  bool ok = true;
  for (const Inst& in : t.code) {
    switch (in.code) {
      case Inst::Code::Const: stack.push_back(in.value); break;
      case Inst::Code::Slot: stack.push_back(slots[in.slot]); break;
      case Inst::Code::Apply: {
        if (op_arity(in.op) == 2) {
          const double b = stack.back();
          stack.pop_back();
          stack.back() = ApplyPoint(in.op, in.exponent, stack.back(), b, ok);
        } else {
          stack.back() = ApplyPoint(in.op, in.exponent, stack.back(), 0.0, ok);
        }
        if (!ok) return false;
      }
    }
  }
  out = stack.back();
  return true;
}

// ---------------------------------------------------------------------------
// Outward-widened interval arithmetic. `empty` means no argument in the box
// lies in the expression's domain.

struct Iv {
  double lo = 0.0;
  double hi = 0.0;
  bool empty = false;
};

inline double Down(double x, double ulps) {
  if (std::isinf(x)) return x;
  return x - (std::fabs(x) * ulps * DBL_EPSILON + DBL_TRUE_MIN);
}
inline double Up(double x, double ulps) {
  if (std::isinf(x)) return x;
  return x + (std::fabs(x) * ulps * DBL_EPSILON + DBL_TRUE_MIN);
}
inline Iv Widen(double lo, double hi, double ulps = 2.0) { return {Down(lo, ulps), Up(hi, ulps)}; }

inline double MulBound(double a, double b) { return (a == 0.0 || b == 0.0) ? 0.0 : a * b; }

Iv IvMul(const Iv& a, const Iv& b) {
  const double p[4] = {MulBound(a.lo, b.lo), MulBound(a.lo, b.hi), MulBound(a.hi, b.lo),
                       MulBound(a.hi, b.hi)};
  return Widen(*std::min_element(p, p + 4), *std::max_element(p, p + 4));
}

double PowInt(double x, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= x;
  return r;
}

Iv IvApply(Op op, int k, const Iv& a, const Iv& b) {
  if (a.empty || (op_arity(op) == 2 && b.empty)) return {0.0, 0.0, true};
  switch (op) {
    case Op::Add: return Widen(a.lo + b.lo, a.hi + b.hi);
    case Op::Sub: return Widen(a.lo - b.hi, a.hi - b.lo);
    case Op::Neg: return {-a.hi, -a.lo};
    case Op::Mul: return IvMul(a, b);
    case Op::Div: {
      if (b.lo == 0.0 && b.hi == 0.0) return {0.0, 0.0, true};
      if (b.lo <= 0.0 && b.hi >= 0.0) return {-kInf, kInf};
      return IvMul(a, Widen(1.0 / b.hi, 1.0 / b.lo));
    }
    case Op::Pow: {
      const double ulps = 2.0 * k + 2.0;
      if (k % 2 == 1) return Widen(PowInt(a.lo, k), PowInt(a.hi, k), ulps);
      if (a.lo >= 0.0) return Widen(PowInt(a.lo, k), PowInt(a.hi, k), ulps);
      if (a.hi <= 0.0) return Widen(PowInt(a.hi, k), PowInt(a.lo, k), ulps);
      return Widen(0.0, std::max(PowInt(a.lo, k), PowInt(a.hi, k)), ulps);
    }
    case Op::Exp: {
      Iv r = Widen(std::exp(a.lo), std::exp(a.hi), 4.0);
      r.lo = std::max(r.lo, 0.0);
      return r;
    }
    case Op::Log:
      if (!(a.hi > 0.0)) return {0.0, 0.0, true};
      return Widen(a.lo > 0.0 ? std::log(a.lo) : -kInf, std::log(a.hi), 4.0);
    case Op::Sqrt:
      if (a.hi < 0.0) return {0.0, 0.0, true};
      return Widen(std::sqrt(std::max(a.lo, 0.0)), std::sqrt(a.hi), 4.0);
    case Op::Abs:
      if (a.lo >= 0.0) return a;
      if (a.hi <= 0.0) return {-a.hi, -a.lo};
      return {0.0, std::max(-a.lo, a.hi)};
  }
  return {-kInf, kInf};
}

Iv EvalInterval(const Tape& t, const Iv* slots, std::vector<Iv>& stack) {
  stack.clear();
  for (const Inst& in : t.code) {
    switch (in.code) {
      case Inst::Code::Const: stack.push_back({in.value, in.value}); break;
      case Inst::Code::Slot: stack.push_back(slots[in.slot]); break;
      case Inst::Code::Apply:
        if (op_arity(in.op) == 2) {
          const Iv b = stack.back();
          stack.pop_back();
          stack.back() = IvApply(in.op, in.exponent, stack.back(), b);
        } else {
          stack.back() = IvApply(in.op, in.exponent, stack.back(), {});
        }
    }
  }
  return stack.back();
}

// Slack that absorbs the difference between floating-point evaluation at a
// point and the exact value the interval encloses.
inline double Margin(double a, double b) {
  return 1e-9 * (1.0 + std::max(std::fabs(a), std::fabs(b)));
}

// ---------------------------------------------------------------------------

struct CompiledConstraint {
  Tape lhs;
  Tape rhs;
  Comparator cmp;
};

struct EliminatedVar {
  std::size_t slot = 0;
  std::vector<double> coef;  // over slots; coef[slot] is the pivot
  double constant = 0.0;
  std::optional<Range> range;
};

std::optional<EliminatedVar> ChooseElimination(const Problem& p, const Assignment& params,
                                               const Elimination& how) {
  if (how.mode == Elimination::Mode::None) return std::nullopt;
  for (const Constraint& c : p.constraints) {
    if (c.cmp != Comparator::Eq) continue;
    auto f = affine_form(sub(c.lhs, c.rhs), params, p.variables);
    if (!f) continue;
    for (std::size_t j = 0; j < p.variables.size(); ++j) {
      if (f->coef[static_cast<Eigen::Index>(j)] == 0.0) continue;
      if (how.mode == Elimination::Mode::Variable && p.variables[j] != how.variable) continue;
      EliminatedVar e;
      e.slot = j;
      e.coef.assign(f->coef.data(), f->coef.data() + f->coef.size());
      e.constant = f->constant;
      return e;
    }
  }
  if (how.mode == Elimination::Mode::Variable) {
    throw Error(ErrorKind::InvalidProblem,
                "no affine equality determines variable '" + how.variable + "'");
  }
  return std::nullopt;
}

class Compiled {
 public:
  Compiled(const Problem& p, const Assignment& params, const Elimination& how, double tol,
           double eq_tol)
      : vars_(p.variables), tol_(tol), eq_tol_(eq_tol) {
    p.validate();
    check_params_bound(p, params);
    objective_ = Compile(p.objective, vars_, params);
    for (const Constraint& c : p.constraints) {
      constraints_.push_back(
          {Compile(c.lhs, vars_, params), Compile(c.rhs, vars_, params), c.cmp});
    }
    elim_ = ChooseElimination(p, params, how);
    for (std::size_t j = 0; j < vars_.size(); ++j) {
      if (!elim_ || elim_->slot != j) free_.push_back(j);
    }
  }

  const std::vector<std::string>& vars() const { return vars_; }
  const std::vector<std::size_t>& free_slots() const { return free_; }
  const std::optional<EliminatedVar>& elimination() const { return elim_; }
  void set_elimination_range(std::optional<Range> r) {
    if (elim_) elim_->range = r;
  }

  // Fills the eliminated slot; false when it leaves its range.
  bool Complete(double* slots) const {
    if (!elim_) return true;
    double s = elim_->constant;
    for (std::size_t j = 0; j < vars_.size(); ++j) {
      if (j != elim_->slot) s += elim_->coef[j] * slots[j];
    }
    const double v = -s / elim_->coef[elim_->slot];
    slots[elim_->slot] = v;
    return !elim_->range || (v >= elim_->range->lo && v <= elim_->range->hi);
  }

  bool Objective(const double* slots, std::vector<double>& stack, double& out) const {
    return EvalPoint(objective_, slots, stack, out);
  }

  bool Feasible(const double* slots, std::vector<double>& stack) const {
    for (const CompiledConstraint& c : constraints_) {
      double l = 0.0;
      double r = 0.0;
      if (!EvalPoint(c.lhs, slots, stack, l) || !EvalPoint(c.rhs, slots, stack, r)) return false;
      bool ok = false;
      switch (c.cmp) {
        case Comparator::Le: ok = l <= r + tol_; break;
        case Comparator::Lt: ok = l < r; break;
        case Comparator::Eq: ok = std::fabs(l - r) <= eq_tol_; break;
        case Comparator::Ge: ok = l + tol_ >= r; break;
        case Comparator::Gt: ok = l > r; break;
      }
      if (!ok) return false;
    }
    return true;
  }

  // Fills the eliminated slot's interval; false when the box provably
  // contains no admissible point.
  bool CompleteInterval(Iv* slots) const {
    if (!elim_) return true;
    Iv s{elim_->constant, elim_->constant};
    for (std::size_t j = 0; j < vars_.size(); ++j) {
      if (j == elim_->slot || elim_->coef[j] == 0.0) continue;
      const Iv term = IvMul({elim_->coef[j], elim_->coef[j]}, slots[j]);
      s = IvApply(Op::Add, 0, s, term);
    }
    const double piv = elim_->coef[elim_->slot];
    Iv v = IvMul({-1.0 / piv, -1.0 / piv}, Widen(s.lo, s.hi));
    v = Widen(v.lo, v.hi, 4.0);
    slots[elim_->slot] = v;
    if (elim_->range) {
      const double m = Margin(v.lo, v.hi);
      if (v.lo > elim_->range->hi + m || v.hi < elim_->range->lo - m) return false;
    }
    return true;
  }

  bool MaybeFeasible(const Iv* slots, std::vector<Iv>& stack) const {
    for (const CompiledConstraint& c : constraints_) {
      const Iv l = EvalInterval(c.lhs, slots, stack);
      if (l.empty) return false;
      const Iv r = EvalInterval(c.rhs, slots, stack);
      if (r.empty) return false;
      const double m = Margin(l.lo, r.hi) + Margin(r.lo, l.hi);
      switch (c.cmp) {
        case Comparator::Le:
          if (l.lo > r.hi + tol_ + m) return false;
          break;
        case Comparator::Lt:
          if (l.lo > r.hi + m) return false;
          break;
        case Comparator::Eq:
          if (l.lo > r.hi + eq_tol_ + m || r.lo > l.hi + eq_tol_ + m) return false;
          break;
        case Comparator::Ge:
          if (r.lo > l.hi + tol_ + m) return false;
          break;
        case Comparator::Gt:
          if (r.lo > l.hi + m) return false;
          break;
      }
    }
    return true;
  }

  Iv ObjectiveInterval(const Iv* slots, std::vector<Iv>& stack) const {
    return EvalInterval(objective_, slots, stack);
  }

 private:
  std::vector<std::string> vars_;
  double tol_;
  double eq_tol_;
  Tape objective_;
  std::vector<CompiledConstraint> constraints_;
  std::optional<EliminatedVar> elim_;
  std::vector<std::size_t> free_;
};

struct Axes {
  std::vector<std::vector<double>> coords;  // per free axis
};

Axes BuildAxes(const Compiled& cp, const SearchBox& box) {
  if (box.resolution < 2) throw Error(ErrorKind::InvalidProblem, "resolution must be at least 2");
  Axes axes;
  const double last = static_cast<double>(box.resolution - 1);
  for (std::size_t slot : cp.free_slots()) {
    const std::string& name = cp.vars()[slot];
    auto it = box.ranges.find(name);
    if (it == box.ranges.end()) {
      throw Error(ErrorKind::InvalidProblem, "search box has no range for variable '" + name + "'");
    }
    const Range r = it->second;
    if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.lo > r.hi) {
      throw Error(ErrorKind::InvalidProblem, "invalid range for variable '" + name + "'");
    }
    const double step = (r.hi - r.lo) / last;
    std::vector<double> c(box.resolution);
    for (std::size_t i = 0; i < box.resolution; ++i) c[i] = r.lo + static_cast<double>(i) * step;
    axes.coords.push_back(std::move(c));
  }
  return axes;
}

struct Best {
  bool found = false;
  double value = kInf;
  std::vector<std::size_t> index;  // per free axis
  std::vector<double> slots;
  std::size_t evaluated = 0;

  // Lexicographic tie-break keeps the result independent of visiting order.
  void Offer(double v, const std::vector<std::size_t>& idx, const std::vector<double>& s) {
    if (!found || v < value || (v == value && idx < index)) {
      found = true;
      value = v;
      index = idx;
      slots = s;
    }
  }
};

class Searcher {
 public:
  Searcher(const Compiled& cp, const Axes& axes)
      : cp_(cp), axes_(axes), slots_(cp.vars().size()), islots_(cp.vars().size()) {}

  bool EvaluateAt(const std::vector<std::size_t>& idx, Best& best) {
    const auto& free = cp_.free_slots();
    for (std::size_t a = 0; a < free.size(); ++a) slots_[free[a]] = axes_.coords[a][idx[a]];
    ++best.evaluated;
    if (!cp_.Complete(slots_.data())) return false;
    if (!cp_.Feasible(slots_.data(), stack_)) return false;
    double v = 0.0;
    if (!cp_.Objective(slots_.data(), stack_, v)) return false;
    best.Offer(v, idx, slots_);
    return true;
  }

  // Lexicographic scan of index box [lo, hi] (inclusive).
  void Scan(const std::vector<std::size_t>& lo, const std::vector<std::size_t>& hi, Best& best) {
    std::vector<std::size_t> idx = lo;
    const std::size_t d = idx.size();
    while (true) {
      EvaluateAt(idx, best);
      std::size_t a = d;
      while (a > 0) {
        --a;
        if (idx[a] < hi[a]) {
          ++idx[a];
          for (std::size_t b = a + 1; b < d; ++b) idx[b] = lo[b];
          break;
        }
        if (a == 0) return;
      }
      if (d == 0) return;
    }
  }

  void BranchAndBound(std::vector<std::size_t> lo, std::vector<std::size_t> hi,
                      std::size_t leaf_points, Best& best) {
    const auto& free = cp_.free_slots();
    for (std::size_t a = 0; a < free.size(); ++a) {
      islots_[free[a]] = {axes_.coords[a][lo[a]], axes_.coords[a][hi[a]]};
    }
    if (!cp_.CompleteInterval(islots_.data())) return;
    if (!cp_.MaybeFeasible(islots_.data(), istack_)) return;
    const Iv obj = cp_.ObjectiveInterval(islots_.data(), istack_);
    if (obj.empty) return;
    if (best.found && obj.lo > best.value + Margin(obj.lo, best.value)) return;

    std::size_t points = 1;
    std::size_t widest = 0;
    std::size_t width = 0;
    for (std::size_t a = 0; a < lo.size(); ++a) {
      const std::size_t w = hi[a] - lo[a] + 1;
      points = points > leaf_points ? points : points * w;
      if (w > width) {
        width = w;
        widest = a;
      }
    }
    if (points <= leaf_points || width <= 1) {
      Scan(lo, hi, best);
      return;
    }
    const std::size_t mid = lo[widest] + (hi[widest] - lo[widest]) / 2;
    std::vector<std::size_t> hi_left = hi;
    hi_left[widest] = mid;
    std::vector<std::size_t> lo_right = lo;
    lo_right[widest] = mid + 1;
    BranchAndBound(lo, std::move(hi_left), leaf_points, best);
    BranchAndBound(std::move(lo_right), std::move(hi), leaf_points, best);
  }

 private:
  const Compiled& cp_;
  const Axes& axes_;
  std::vector<double> slots_;
  std::vector<double> stack_;
  std::vector<Iv> islots_;
  std::vector<Iv> istack_;
};

Compiled MakeCompiled(const Problem& p, const Assignment& params, const SearchBox& box,
                      const Elimination& how, double tol, double eq_tol) {
  Compiled cp(p, params, how, tol, eq_tol);
  if (cp.elimination()) {
    auto it = box.ranges.find(cp.vars()[cp.elimination()->slot]);
    cp.set_elimination_range(it == box.ranges.end() ? std::nullopt
                                                    : std::optional<Range>(it->second));
  }
  return cp;
}

}  // namespace

GridResult grid_minimize(const Problem& p, const Assignment& params, const SearchBox& box,
                         const GridOptions& opts) {
  const Compiled cp =
      MakeCompiled(p, params, box, opts.eliminate, opts.tol, opts.eq_tol.value_or(opts.tol));
  const Axes axes = BuildAxes(cp, box);
  const std::size_t d = axes.coords.size();
  const std::size_t res = box.resolution;

  Best best;
  std::vector<std::size_t> lo(d, 0);
  std::vector<std::size_t> hi(d, res - 1);
  if (opts.prune) {
    Searcher s(cp, axes);
    s.BranchAndBound(lo, hi, std::max<std::size_t>(opts.leaf_points, 1), best);
  } else if (opts.threads <= 1 || d == 0) {
    Searcher s(cp, axes);
    s.Scan(lo, hi, best);
  } else {
    // Contiguous slabs of the first axis; merging by (value, index) gives
    // the sequential answer.
    const std::size_t parts = std::min<std::size_t>(opts.threads, res);
    std::vector<Best> partial(parts);
    std::vector<std::thread> workers;
    for (std::size_t k = 0; k < parts; ++k) {
      workers.emplace_back([&, k] {
        std::vector<std::size_t> l = lo;
        std::vector<std::size_t> h = hi;
        l[0] = k * res / parts;
        h[0] = (k + 1) * res / parts - 1;
        Searcher s(cp, axes);
        s.Scan(l, h, partial[k]);
      });
    }
    for (std::thread& w : workers) w.join();
    for (const Best& b : partial) {
      best.evaluated += b.evaluated;
      if (b.found) best.Offer(b.value, b.index, b.slots);
    }
  }
  if (!best.found) {
    throw Error(ErrorKind::Infeasible, "no lattice point is feasible (" +
                                           std::to_string(best.evaluated) + " evaluated)");
  }
  GridResult r;
  for (std::size_t j = 0; j < cp.vars().size(); ++j) r.point[cp.vars()[j]] = best.slots[j];
  r.value = best.value;
  if (cp.elimination()) r.eliminated = cp.vars()[cp.elimination()->slot];
  r.points_evaluated = best.evaluated;
  return r;
}

double cell_objective_variation(const Problem& p, const Assignment& params, const SearchBox& box,
                                const GridResult& at, const GridOptions& opts) {
  const Compiled cp =
      MakeCompiled(p, params, box, opts.eliminate, opts.tol, opts.eq_tol.value_or(opts.tol));
  const Axes axes = BuildAxes(cp, box);
  std::vector<double> base(cp.vars().size());
  for (std::size_t j = 0; j < cp.vars().size(); ++j) base[j] = at.point.at(cp.vars()[j]);
  std::vector<double> stack;
  double f0 = 0.0;
  if (!cp.Objective(base.data(), stack, f0)) {
    throw DomainError("objective", 0.0);
  }
  double worst = 0.0;
  const auto& free = cp.free_slots();
  for (std::size_t a = 0; a < free.size(); ++a) {
    const auto& c = axes.coords[a];
    const auto it = std::min_element(c.begin(), c.end(), [&](double x, double y) {
      return std::fabs(x - base[free[a]]) < std::fabs(y - base[free[a]]);
    });
    const std::size_t i = static_cast<std::size_t>(it - c.begin());
    for (std::size_t n : {i == 0 ? i : i - 1, i + 1 < c.size() ? i + 1 : i}) {
      if (n == i) continue;
      std::vector<double> s = base;
      s[free[a]] = c[n];
      cp.Complete(s.data());
      double f = 0.0;
      if (cp.Objective(s.data(), stack, f)) worst = std::max(worst, std::fabs(f - f0));
    }
  }
  return worst;
}

std::vector<Assignment> sample_feasible(const Problem& p, const Assignment& params,
                                        const SearchBox& box, const SampleOptions& opts) {
  const Compiled cp = MakeCompiled(p, params, box, opts.eliminate, opts.tol, opts.tol);
  std::vector<std::uniform_real_distribution<double>> dists;
  for (std::size_t slot : cp.free_slots()) {
    auto it = box.ranges.find(cp.vars()[slot]);
    if (it == box.ranges.end()) {
      throw Error(ErrorKind::InvalidProblem,
                  "search box has no range for variable '" + cp.vars()[slot] + "'");
    }
    dists.emplace_back(it->second.lo, it->second.hi);
  }
  std::mt19937_64 rng(opts.seed);
  std::vector<Assignment> out;
  std::vector<double> slots(cp.vars().size());
  std::vector<double> stack;
  for (std::size_t draw = 0; draw < opts.max_draws && out.size() < opts.count; ++draw) {
    const auto& free = cp.free_slots();
    for (std::size_t a = 0; a < free.size(); ++a) slots[free[a]] = dists[a](rng);
    if (!cp.Complete(slots.data()) || !cp.Feasible(slots.data(), stack)) continue;
    Assignment pt;
    for (std::size_t j = 0; j < slots.size(); ++j) pt[cp.vars()[j]] = slots[j];
    out.push_back(std::move(pt));
  }
  return out;
}

}  // namespace dcpcanon
