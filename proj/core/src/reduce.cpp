#include "dcpcanon/reduce.hpp"

#include <algorithm>
#include <charconv>
#include <random>
#include <set>
#include <sstream>

#include "dcpcanon/atoms.hpp"
#include "dcpcanon/dsl.hpp"
#include "dcpcanon/error.hpp"

namespace dcpcanon {

std::string_view schema_name(Schema s) {
  switch (s) {
    case Schema::LinearizeAntimono: return "linearize_antimono";
    case Schema::LinearizeMono: return "linearize_mono";
    case Schema::GraphExpandConcave: return "graph_expand_concave";
    case Schema::GraphExpandConvex: return "graph_expand_convex";
    case Schema::EliminateRedundant: return "eliminate_redundant";
  }
  return "?";
}

std::optional<Schema> schema_from_name(std::string_view name) {
  for (Schema s : {Schema::LinearizeAntimono, Schema::LinearizeMono, Schema::GraphExpandConcave,
                   Schema::GraphExpandConvex, Schema::EliminateRedundant}) {
    if (schema_name(s) == name) return s;
  }
  // Shorthands resolve to a concrete variant once the polarity is known;
  // the antimonotone / concave variants serve as placeholders here.
  if (name == "linearize") return Schema::LinearizeAntimono;
  if (name == "graph_expand") return Schema::GraphExpandConcave;
  return std::nullopt;
}

namespace {

bool IsZero(const Expr& e) { return e.is_constant() && e.value() == 0.0; }

bool IsAffine(const Expr& e, const SignContext& signs) {
  return dcpcanon::is_affine(curvature_of(e, signs).curvature);
}

bool NameUsed(const Problem& p, std::string_view name) {
  return p.has_variable(name) || p.find_param(name) != nullptr;
}

std::string SmallestFreshName(const Problem& p) {
  for (std::size_t k = 1;; ++k) {
    std::string name = "t" + std::to_string(k);
    if (!NameUsed(p, name)) return name;
  }
}

std::string ChooseFresh(const Problem& p, const StepOptions& opts) {
  if (!opts.fresh_name) return SmallestFreshName(p);
  if (NameUsed(p, *opts.fresh_name)) {
    throw Error(ErrorKind::InvalidProblem,
                "fresh name '" + *opts.fresh_name + "' is already declared");
  }
  return *opts.fresh_name;
}

Expr& SideOf(Constraint& c, OccurrencePath::Side side) {
  return side == OccurrencePath::Side::Lhs ? c.lhs : c.rhs;
}

struct Selected {
  Expr target;
  Polarity polarity;
  std::vector<OccurrencePath> occurrences;
};

Selected Select(const Problem& p, const OccurrencePath& path) {
  if (path.root == OccurrencePath::Root::Objective) {
    throw Error(ErrorKind::ObjectiveTarget,
                path.to_string() + ": objective occurrences are never rewritten");
  }
  const Expr& g = subterm(p, path);
  const SignContext signs = sign_context(p);
  if (IsAffine(g, signs)) {
    throw Error(ErrorKind::AffineTarget, path.to_string() + ": '" + print(g) + "' is affine");
  }
  const Polarity pol = polarity_of(p, path);
  if (pol != Polarity::Monotone && pol != Polarity::Antimonotone) {
    throw Error(ErrorKind::PolarityUnknown,
                path.to_string() + ": polarity " + std::string(polarity_name(pol)) + " for '" +
                    print(g) + "'");
  }
  Selected s{g, pol, {}};
  for (const Occurrence& occ : find_occurrences(p, g)) {
    if (occ.polarity == pol) s.occurrences.push_back(occ.path);
  }
  return s;
}

// Substitutes `t` at every selected occurrence, prepends the fresh
// variable and the new constraints.
StepResult Rewrite(const Problem& p, Schema schema, const OccurrencePath& at, const Selected& sel,
                   const std::string& fresh, const Expr& definition,
                   std::vector<Constraint> added) {
  const Expr t = Expr::variable(fresh);
  Problem q;
  q.params = p.params;
  q.objective = p.objective;
  q.variables.push_back(fresh);
  q.variables.insert(q.variables.end(), p.variables.begin(), p.variables.end());
  std::vector<Constraint> rest = p.constraints;
  for (const OccurrencePath& occ : sel.occurrences) {
    Expr& side = SideOf(rest[occ.constraint], occ.side);
    side = occ.children.empty() ? t : side.replace_at(occ.children, t);
  }
  q.constraints = added;
  q.constraints.insert(q.constraints.end(), rest.begin(), rest.end());

  TraceStep step;
  step.schema = schema;
  step.at = at;
  step.targets = sel.occurrences;
  step.fresh = fresh;
  step.definition = definition;
  for (std::size_t i = 0; i < added.size(); ++i) step.added.push_back(i);
  step.added_constraints = std::move(added);
  return {std::move(q), std::move(step)};
}

StepResult Linearize(const Problem& p, const OccurrencePath& path, const StepOptions& opts,
                     std::optional<Schema> expected) {
  const Selected sel = Select(p, path);
  const Schema schema = sel.polarity == Polarity::Antimonotone ? Schema::LinearizeAntimono
                                                               : Schema::LinearizeMono;
  if (expected && *expected != schema) {
    throw Error(ErrorKind::PolarityMismatch,
                path.to_string() + ": " + std::string(schema_name(*expected)) +
                    " needs an " +
                    (*expected == Schema::LinearizeAntimono ? "antimonotone" : "monotone") +
                    " occurrence, '" + print(sel.target) + "' is " +
                    std::string(polarity_name(sel.polarity)));
  }
  const std::string fresh = ChooseFresh(p, opts);
  const Expr t = Expr::variable(fresh);
  Constraint c = schema == Schema::LinearizeAntimono ? Constraint{sel.target, Comparator::Le, t}
                                                     : Constraint{t, Comparator::Le, sel.target};
  return Rewrite(p, schema, path, sel, fresh, sel.target, {std::move(c)});
}

StepResult GraphExpand(const Problem& p, const OccurrencePath& path, const StepOptions& opts,
                       std::optional<Schema> expected) {
  const Selected sel = Select(p, path);
  const Expr& g = sel.target;
  std::optional<GraphImplementation> gi;
  if (g.is_apply()) gi = graph_impl(g.op());
  if (!gi) {
    throw Error(ErrorKind::NoGraphImpl,
                path.to_string() + ": no graph implementation for '" +
                    (g.is_apply() ? atom_name(g.op(), g.exponent()) : print(g)) + "'");
  }
  const bool greatest = gi->direction == GraphDirection::Greatest;
  const Schema schema = greatest ? Schema::GraphExpandConcave : Schema::GraphExpandConvex;
  const Polarity needed = greatest ? Polarity::Monotone : Polarity::Antimonotone;
  if (sel.polarity != needed || (expected && *expected != schema)) {
    throw Error(ErrorKind::PolarityMismatch,
                path.to_string() + ": " + std::string(schema_name(schema)) + " of " + gi->atom +
                    " needs a " + std::string(polarity_name(needed)) + " occurrence, got " +
                    std::string(polarity_name(sel.polarity)));
  }
  for (const Constraint& fact : gi->domain_facts(g.args())) {
    if (!find_implication(p.constraints, fact, std::vector<bool>(p.constraints.size(), false))) {
      throw Error(ErrorKind::MissingDomainFact,
                  path.to_string() + ": expanding '" + print(g) + "' requires '" + print(fact) +
                      "'");
    }
  }
  const std::string fresh = ChooseFresh(p, opts);
  return Rewrite(p, schema, path, sel, fresh, g, gi->constraints(Expr::variable(fresh), g.args()));
}

bool Weaker(Comparator premise, Comparator conclusion) {
  // Whether `a premise b` gives `a conclusion b`.
  if (premise == conclusion) return true;
  return premise == Comparator::Lt && conclusion == Comparator::Le;
}

bool IsUpperBound(Comparator c) { return c == Comparator::Le || c == Comparator::Lt; }

Assignment SamplePoint(const Problem& p, const Assignment& params, std::mt19937_64& rng) {
  Assignment pt;
  std::uniform_real_distribution<double> var(-5.0, 5.0);
  for (const std::string& v : p.variables) pt[v] = var(rng);
  for (const ParamDecl& d : p.params) {
    if (auto it = params.find(d.name); it != params.end()) {
      pt[d.name] = it->second;
      continue;
    }
    double lo = -3.0;
    double hi = 3.0;
    switch (d.sign) {
      case SignAttr::None: break;
      case SignAttr::Nonneg: lo = 0.0; break;
      case SignAttr::Pos: lo = 1e-3; break;
      case SignAttr::Nonpos: hi = 0.0; break;
      case SignAttr::Neg: hi = -1e-3; break;
    }
    pt[d.name] = std::uniform_real_distribution<double>(lo, hi)(rng);
  }
  return pt;
}

bool HoldsQuiet(const Constraint& c, const Assignment& pt, double tol, bool& domain_error) {
  try {
    return holds(c, pt, tol);
  } catch (const DomainError&) {
    domain_error = true;
    return false;
  }
}

}  // namespace

StepResult linearize(const Problem& p, const OccurrencePath& path, const StepOptions& opts) {
  return Linearize(p, path, opts, std::nullopt);
}

StepResult graph_expand(const Problem& p, const OccurrencePath& path, const StepOptions& opts) {
  return GraphExpand(p, path, opts, std::nullopt);
}

std::optional<Implication> find_implication(const std::vector<Constraint>& cs,
                                            const Constraint& target,
                                            const std::vector<bool>& excluded) {
  const Constraint goal = oriented(target);
  std::vector<Constraint> norm;
  norm.reserve(cs.size());
  for (const Constraint& c : cs) norm.push_back(oriented(c));
  auto usable = [&](std::size_t i) { return i >= excluded.size() || !excluded[i]; };

  for (std::size_t i = 0; i < norm.size(); ++i) {
    if (usable(i) && norm[i] == goal) return Implication{{i}, "identical"};
  }
  if (!IsUpperBound(goal.cmp)) return std::nullopt;

  if (IsZero(goal.lhs)) {
    for (std::size_t i = 0; i < norm.size(); ++i) {
      const Constraint& c = norm[i];
      if (!usable(i) || !IsUpperBound(c.cmp) || c.rhs != goal.rhs) continue;
      if (IsZero(c.lhs) && Weaker(c.cmp, goal.cmp)) return Implication{{i}, "strict weakening"};
      if (goal.cmp == Comparator::Le && c.lhs.is_apply(Op::Pow) && c.lhs.exponent() == 2) {
        return Implication{{i}, "square below"};
      }
      if (c.lhs.is_apply(Op::Exp)) return Implication{{i}, "exponential below"};
    }
  }

  for (std::size_t i = 0; i < norm.size(); ++i) {
    const Constraint& first = norm[i];
    if (!usable(i) || !IsUpperBound(first.cmp) || first.lhs != goal.lhs) continue;
    for (std::size_t j = 0; j < norm.size(); ++j) {
      const Constraint& second = norm[j];
      if (j == i || !usable(j) || !IsUpperBound(second.cmp)) continue;
      if (second.lhs != first.rhs || second.rhs != goal.rhs) continue;
      const bool strict = first.cmp == Comparator::Lt || second.cmp == Comparator::Lt;
      if (goal.cmp == Comparator::Le || strict) return Implication{{i, j}, "transitivity"};
    }
  }
  return std::nullopt;
}

bool implication_survives_sampling(const Problem& p, const std::vector<Constraint>& premises,
                                   const Constraint& conclusion, const StepOptions& opts) {
  std::mt19937_64 rng(opts.seed);
  for (std::size_t s = 0; s < opts.samples; ++s) {
    const Assignment pt = SamplePoint(p, opts.params, rng);
    bool domain_error = false;
    const bool premises_hold = std::all_of(premises.begin(), premises.end(), [&](const auto& c) {
      return HoldsQuiet(c, pt, 0.0, domain_error);
    });
    if (!premises_hold || domain_error) continue;
    if (!HoldsQuiet(conclusion, pt, 1e-9, domain_error) && !domain_error) return false;
  }
  return true;
}

StepResult eliminate_redundant(const Problem& p, std::vector<std::size_t> indices,
                               const StepOptions& opts) {
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  if (indices.empty()) {
    throw Error(ErrorKind::InvalidPath, "eliminate_redundant needs at least one constraint index");
  }
  std::vector<bool> excluded(p.constraints.size(), false);
  for (std::size_t i : indices) {
    if (i >= p.constraints.size()) {
      throw Error(ErrorKind::InvalidPath, "constraint #" + std::to_string(i) +
                                              " does not exist (problem has " +
                                              std::to_string(p.constraints.size()) + ")");
    }
    excluded[i] = true;
  }
  std::set<std::size_t> premises;
  for (std::size_t i : indices) {
    const Constraint& c = p.constraints[i];
    const std::string where = "constraint #" + std::to_string(i) + " (" + print(c) + ")";
    auto imp = find_implication(p.constraints, c, excluded);
    if (!imp) {
      throw Error(ErrorKind::NotProvablyRedundant, where + ": no implication rule applies");
    }
    std::vector<Constraint> used;
    for (std::size_t k : imp->premises) used.push_back(p.constraints[k]);
    if (!implication_survives_sampling(p, used, c, opts)) {
      throw Error(ErrorKind::NotProvablyRedundant,
                  where + ": rule '" + imp->rule + "' refuted by a sampled point");
    }
    premises.insert(imp->premises.begin(), imp->premises.end());
  }
  Problem q = p;
  q.constraints.clear();
  for (std::size_t i = 0; i < p.constraints.size(); ++i) {
    if (!excluded[i]) q.constraints.push_back(p.constraints[i]);
  }
  TraceStep step;
  step.schema = Schema::EliminateRedundant;
  step.removed = indices;
  step.implied_by.assign(premises.begin(), premises.end());
  return {std::move(q), std::move(step)};
}

namespace {

std::vector<std::size_t> ParseIndexList(std::string_view text) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    if (comma == std::string_view::npos) comma = text.size();
    std::string_view part = text.substr(start, comma - start);
    while (!part.empty() && part.front() == ' ') part.remove_prefix(1);
    while (!part.empty() && part.back() == ' ') part.remove_suffix(1);
    if (!part.empty() && part.front() == 'c') part.remove_prefix(1);
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (part.empty() || ec != std::errc() || ptr != part.data() + part.size()) {
      throw Error(ErrorKind::InvalidPath,
                  "'" + std::string(text) + "': expected comma-separated constraint indices");
    }
    out.push_back(v);
    start = comma + 1;
  }
  return out;
}

StepResult ApplyStep(const Problem& p, Schema schema, std::string_view path,
                     const StepOptions& opts, bool exact_variant) {
  switch (schema) {
    case Schema::LinearizeAntimono:
    case Schema::LinearizeMono:
      return Linearize(p, OccurrencePath::parse(path), opts,
                       exact_variant ? std::optional<Schema>(schema) : std::nullopt);
    case Schema::GraphExpandConcave:
    case Schema::GraphExpandConvex:
      return GraphExpand(p, OccurrencePath::parse(path), opts,
                         exact_variant ? std::optional<Schema>(schema) : std::nullopt);
    case Schema::EliminateRedundant: return eliminate_redundant(p, ParseIndexList(path), opts);
  }
  throw Error(ErrorKind::InvalidPath, "unknown schema");
}

}  // namespace

StepResult apply_step(const Problem& p, Schema schema, std::string_view path,
                      const StepOptions& opts) {
  return ApplyStep(p, schema, path, opts, true);
}

namespace {

// Fields that identify a step in the text form.
bool SameVisible(const TraceStep& a, const TraceStep& b) {
  return a.schema == b.schema && a.at == b.at && a.fresh == b.fresh &&
         a.definition == b.definition && a.added_constraints == b.added_constraints &&
         a.removed == b.removed;
}

std::string JoinIndices(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

StepResult Reapply(const Problem& p, const TraceStep& recorded, std::size_t k) {
  try {
    StepOptions opts;
    if (!recorded.fresh.empty()) opts.fresh_name = recorded.fresh;
    if (recorded.schema == Schema::EliminateRedundant) {
      return eliminate_redundant(p, recorded.removed, opts);
    }
    if (!recorded.at) throw Error(ErrorKind::InvalidPath, "step has no occurrence path");
    return ApplyStep(p, recorded.schema, recorded.at->to_string(), opts, true);
  } catch (const Error& e) {
    throw Error(ErrorKind::TraceMismatch,
                "step " + std::to_string(k) + " does not apply: " + std::string(e.what()));
  }
}

}  // namespace

std::vector<Problem> ReductionTrace::stages() const {
  std::vector<Problem> out{original};
  for (std::size_t k = 0; k < steps.size(); ++k) {
    out.push_back(Reapply(out.back(), steps[k], k + 1).problem);
  }
  return out;
}

ReductionTrace replay(const Problem& original, const std::vector<TraceStep>& steps) {
  ReductionTrace trace{original, {}, original};
  for (std::size_t k = 0; k < steps.size(); ++k) {
    StepResult r = Reapply(trace.final_problem, steps[k], k + 1);
    if (!SameVisible(r.step, steps[k])) {
      throw Error(ErrorKind::TraceMismatch,
                  "step " + std::to_string(k + 1) + " (" +
                      std::string(schema_name(steps[k].schema)) +
                      ") produces a different rewrite than recorded");
    }
    trace.steps.push_back(std::move(r.step));
    trace.final_problem = std::move(r.problem);
  }
  return trace;
}

Assignment backmap(const ReductionTrace& trace, const Assignment& point) {
  Assignment out;
  for (const std::string& v : trace.original.variables) {
    auto it = point.find(v);
    if (it == point.end()) throw Error(ErrorKind::MissingVariable, v);
    out[v] = it->second;
  }
  return out;
}

Assignment forward_map(const ReductionTrace& trace, const Assignment& point,
                       const Assignment& params) {
  Assignment env = params;
  for (const std::string& v : trace.original.variables) {
    auto it = point.find(v);
    if (it == point.end()) throw Error(ErrorKind::MissingVariable, v);
    env[v] = it->second;
  }
  for (const TraceStep& step : trace.steps) {
    if (step.definition) env[step.fresh] = eval(*step.definition, env);
  }
  Assignment out;
  for (const std::string& v : trace.final_problem.variables) out[v] = env.at(v);
  return out;
}

std::string write_trace(const ReductionTrace& trace) {
  std::string out = "TRACE 1\n";
  for (std::size_t k = 0; k < trace.steps.size(); ++k) {
    const TraceStep& s = trace.steps[k];
    out += "STEP " + std::to_string(k + 1) + " " + std::string(schema_name(s.schema));
    out += " AT " + (s.at ? s.at->to_string() : std::string("-"));
    out += " FRESH " + (s.fresh.empty() ? std::string("-") : s.fresh);
    out += " DEF " + (s.definition ? print(*s.definition) : std::string("-"));
    out += " ADD ";
    if (s.added_constraints.empty()) out += "-";
    for (std::size_t i = 0; i < s.added_constraints.size(); ++i) {
      if (i) out += "; ";
      out += print(s.added_constraints[i]);
    }
    out += " REMOVE " + (s.removed.empty() ? std::string("-") : JoinIndices(s.removed));
    out += "\n";
  }
  out += "END\n";
  return out;
}

namespace {

struct RawStep {
  std::size_t line = 0;
  Schema schema = Schema::LinearizeAntimono;
  std::optional<OccurrencePath> at;
  std::string fresh;
  std::string body;  // "<def> ADD <constraints> REMOVE <indices>"
};

[[noreturn]] void Malformed(std::size_t line, const std::string& msg) {
  throw Error(ErrorKind::MalformedFile, "line " + std::to_string(line) + ": " + msg);
}

std::string Trim(std::string_view s) {
  const std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const std::size_t e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> SplitOn(const std::string& s, std::string_view sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t at = s.find(sep, start);
    out.push_back(Trim(std::string_view(s).substr(start, at == std::string::npos ? at : at - start)));
    if (at == std::string::npos) break;
    start = at + sep.size();
  }
  return out;
}

// Reads DEF / ADD against the post-step problem, trying each " ADD "
// separator until both halves parse.
void ParseBody(const RawStep& raw, const Problem& post, TraceStep& into) {
  const std::size_t rem = raw.body.rfind(" REMOVE ");
  if (rem == std::string::npos) Malformed(raw.line, "missing REMOVE field");
  const std::string removed = Trim(std::string_view(raw.body).substr(rem + 8));
  if (removed != "-") into.removed = ParseIndexList(removed);
  const std::string head = " " + raw.body.substr(0, rem);
  std::size_t pos = head.find(" ADD ");
  while (pos != std::string::npos) {
    const std::string def = Trim(std::string_view(head).substr(0, pos));
    const std::string add = Trim(std::string_view(head).substr(pos + 5));
    try {
      TraceStep t;
      if (def != "-") t.definition = parse_expression(def, post);
      if (add != "-") {
        for (const std::string& c : SplitOn(add, ";")) {
          t.added_constraints.push_back(parse_constraint(c, post));
        }
      }
      into.definition = std::move(t.definition);
      into.added_constraints = std::move(t.added_constraints);
      return;
    } catch (const Error&) {
      pos = head.find(" ADD ", pos + 1);
    }
  }
  Malformed(raw.line, "DEF / ADD fields do not parse against the problem");
}

}  // namespace

ReductionTrace read_trace(std::string_view text, const Problem& original) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  std::vector<RawStep> raw;
  bool header = false;
  bool footer = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = Trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (footer) Malformed(lineno, "content after END");
    if (!header) {
      if (t != "TRACE 1") Malformed(lineno, "expected 'TRACE 1'");
      header = true;
      continue;
    }
    if (t == "END") {
      footer = true;
      continue;
    }
    std::istringstream ls(t);
    std::string tok[8];
    for (std::string& s : tok) {
      if (!(ls >> s)) Malformed(lineno, "truncated STEP line");
    }
    if (tok[0] != "STEP" || tok[3] != "AT" || tok[5] != "FRESH" || tok[7] != "DEF") {
      Malformed(lineno, "expected 'STEP <k> <schema> AT <path> FRESH <name> DEF ...'");
    }
    if (tok[1] != std::to_string(raw.size() + 1)) {
      Malformed(lineno, "step number " + tok[1] + " out of sequence");
    }
    RawStep r;
    r.line = lineno;
    auto schema = schema_from_name(tok[2]);
    if (!schema || (tok[2] == "linearize" || tok[2] == "graph_expand")) {
      Malformed(lineno, "unknown schema '" + tok[2] + "'");
    }
    r.schema = *schema;
    if (tok[4] != "-") {
      try {
        r.at = OccurrencePath::parse(tok[4]);
      } catch (const Error& e) {
        Malformed(lineno, e.what());
      }
    }
    if (tok[6] != "-") r.fresh = tok[6];
    std::string rest;
    std::getline(ls, rest);
    r.body = Trim(rest);
    raw.push_back(std::move(r));
  }
  if (!header) Malformed(lineno, "expected 'TRACE 1'");
  if (!footer) Malformed(lineno, "missing END");

  ReductionTrace trace{original, {}, original};
  for (std::size_t k = 0; k < raw.size(); ++k) {
    TraceStep recorded;
    recorded.schema = raw[k].schema;
    recorded.at = raw[k].at;
    recorded.fresh = raw[k].fresh;
    // REMOVE is needed before re-application for eliminate steps.
    {
      const std::size_t rem = raw[k].body.rfind(" REMOVE ");
      if (rem == std::string::npos) Malformed(raw[k].line, "missing REMOVE field");
      const std::string removed = Trim(std::string_view(raw[k].body).substr(rem + 8));
      if (removed != "-") recorded.removed = ParseIndexList(removed);
    }
    StepResult r = Reapply(trace.final_problem, recorded, k + 1);
    ParseBody(raw[k], r.problem, recorded);
    if (!SameVisible(r.step, recorded)) {
      throw Error(ErrorKind::TraceMismatch,
                  "step " + std::to_string(k + 1) + " (line " + std::to_string(raw[k].line) +
                      ") produces a different rewrite than recorded");
    }
    trace.steps.push_back(std::move(r.step));
    trace.final_problem = std::move(r.problem);
  }
  return trace;
}

bool is_cone_representable(const Constraint& constraint, const SignContext& signs) {
  const Constraint c = oriented(constraint);
  if (c.cmp == Comparator::Eq) return IsAffine(c.lhs, signs) && IsAffine(c.rhs, signs);
  if (!IsAffine(c.rhs, signs)) return false;
  if (IsAffine(c.lhs, signs)) return true;
  const bool head = (c.lhs.is_apply(Op::Pow) && c.lhs.exponent() == 2) || c.lhs.is_apply(Op::Exp);
  return head && IsAffine(c.lhs.args()[0], signs);
}

namespace {

struct Pick {
  OccurrencePath path;
  Expr node;
};

// First constraint (in order) that is not cone-representable and contains
// a non-affine application; within it, the first such node in post-order
// over lhs then rhs, i.e. the leftmost-innermost one.
std::optional<Pick> NextOccurrence(const Problem& p) {
  const SignContext signs = sign_context(p);
  for (std::size_t i = 0; i < p.constraints.size(); ++i) {
    const Constraint& c = p.constraints[i];
    if (is_cone_representable(c, signs)) continue;
    for (auto side : {OccurrencePath::Side::Lhs, OccurrencePath::Side::Rhs}) {
      std::optional<Pick> found;
      const Expr& root = side == OccurrencePath::Side::Lhs ? c.lhs : c.rhs;
      root.visit_postorder([&](const Expr& e, const std::vector<std::size_t>& path) {
        if (found || !e.is_apply() || IsAffine(e, signs)) return;
        OccurrencePath op;
        op.root = OccurrencePath::Root::Constraint;
        op.constraint = i;
        op.side = side;
        op.children = path;
        found = Pick{std::move(op), e};
      });
      if (found) return found;
    }
  }
  return std::nullopt;
}

std::string DriverFreshName(const Problem& p, std::size_t k) {
  const std::string base = "t" + std::to_string(k);
  if (!NameUsed(p, base)) return base;
  for (std::size_t j = 1;; ++j) {
    std::string name = base + "_" + std::to_string(j);
    if (!NameUsed(p, name)) return name;
  }
}

}  // namespace

CanonResult canonize(const Problem& p, const Assignment& params) {
  p.validate();
  check_params_bound(p, params);
  const DcpVerdict verdict = dcp_check(p);
  if (!verdict.conformant) {
    std::string why = verdict.objective_ok ? std::string() : verdict.objective_message;
    for (const ConstraintDiagnosis& d : verdict.constraints) {
      if (d.ok) continue;
      if (!why.empty()) why += "; ";
      why += d.message;
    }
    throw Error(ErrorKind::NotConeRepresentable, "problem is not DCP: " + why);
  }
  if (!affine_form(p.objective, params, p.variables)) {
    throw Error(ErrorKind::NotConeRepresentable,
                "objective '" + print(p.objective) + "' is not affine");
  }

  ReductionTrace trace{p, {}, p};
  std::vector<std::string> fresh_order;
  constexpr std::size_t kMaxSteps = 1000;
  while (auto pick = NextOccurrence(trace.final_problem)) {
    if (trace.steps.size() >= kMaxSteps) {
      throw Error(ErrorKind::NotConeRepresentable, "expansion did not terminate");
    }
    const Problem& cur = trace.final_problem;
    const bool has_impl = graph_impl(pick->node.op()).has_value();
    const Constraint& c = cur.constraints[pick->path.constraint];
    const Expr& other = pick->path.side == OccurrencePath::Side::Lhs ? c.rhs : c.lhs;
    if (!has_impl && pick->path.children.empty() && IsAffine(other, sign_context(cur))) {
      // Linearizing here would only rename the atom.
      throw Error(ErrorKind::NotConeRepresentable,
                  pick->path.to_string() + ": no cone form for '" + print(c) + "' (atom " +
                      atom_name(pick->node.op(), pick->node.exponent()) + ")");
    }
    StepOptions opts;
    opts.params = params;
    opts.fresh_name = DriverFreshName(cur, fresh_order.size() + 1);
    StepResult r = [&] {
      try {
        return has_impl ? graph_expand(cur, pick->path, opts) : linearize(cur, pick->path, opts);
      } catch (const Error& e) {
        if (e.detail().rfind(pick->path.to_string(), 0) == 0) throw;
        throw Error(e.kind(), pick->path.to_string() + ": " + e.detail());
      }
    }();
    fresh_order.push_back(r.step.fresh);
    trace.steps.push_back(std::move(r.step));
    trace.final_problem = std::move(r.problem);
  }

  // Greedy redundancy elimination: keep a constraint in the removal set only
  // if every member of the set still follows from what remains.
  const Problem& cur = trace.final_problem;
  StepOptions opts;
  opts.params = params;
  std::vector<bool> removed(cur.constraints.size(), false);
  std::vector<std::size_t> removal;
  for (std::size_t i = 0; i < cur.constraints.size(); ++i) {
    std::vector<bool> trial = removed;
    trial[i] = true;
    std::vector<std::size_t> cand = removal;
    cand.push_back(i);
    const bool ok = std::all_of(cand.begin(), cand.end(), [&](std::size_t j) {
      auto imp = find_implication(cur.constraints, cur.constraints[j], trial);
      if (!imp) return false;
      std::vector<Constraint> used;
      for (std::size_t k : imp->premises) used.push_back(cur.constraints[k]);
      return implication_survives_sampling(cur, used, cur.constraints[j], opts);
    });
    if (ok) {
      removed = std::move(trial);
      removal = std::move(cand);
    }
  }
  if (!removal.empty()) {
    StepResult r = eliminate_redundant(cur, removal, opts);
    trace.steps.push_back(std::move(r.step));
    trace.final_problem = std::move(r.problem);
  }

  std::vector<std::string> order = p.variables;
  order.insert(order.end(), fresh_order.begin(), fresh_order.end());
  try {
    return {emit(trace.final_problem, params, order), std::move(trace)};
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::UnrecognizedShape) throw;
    throw Error(ErrorKind::NotConeRepresentable, e.detail());
  }
}

}  // namespace dcpcanon
