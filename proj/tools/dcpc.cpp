// dcpc: DCP checking, canonization to conic form, and verification.
//
// Exit codes: 0 success, 1 semantic failure, 2 input or parse failure.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dcpcanon/atoms.hpp"
#include "dcpcanon/conic.hpp"
#include "dcpcanon/dcp.hpp"
#include "dcpcanon/dsl.hpp"
#include "dcpcanon/error.hpp"
#include "dcpcanon/oracle.hpp"
#include "dcpcanon/problem.hpp"
#include "dcpcanon/reduce.hpp"

namespace dc = dcpcanon;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kBadInput = 2;

// Input problems (unreadable files, malformed text) exit with kBadInput.
struct InputFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputFailure("cannot read '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void WriteFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw InputFailure("cannot write '" + path + "'");
}

dc::Problem ReadProblem(const std::string& path) {
  const std::string text = ReadFile(path);
  try {
    return dc::parse(text);
  } catch (const dc::ParseError& e) {
    std::string msg;
    for (const dc::Diagnostic& d : e.diagnostics()) {
      msg += path + ":" + std::to_string(d.line) + ":" + std::to_string(d.column) + ": " +
             d.message + "\n";
    }
    if (!msg.empty()) msg.pop_back();
    throw InputFailure(msg);
  }
}

double ParseDouble(const std::string& text, const std::string& what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw InputFailure("malformed number '" + text + "' in " + what);
  }
  return v;
}

dc::Assignment ParseParams(const std::vector<std::string>& specs) {
  dc::Assignment out;
  for (const std::string& s : specs) {
    const std::size_t eq = s.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw InputFailure("--param expects name=value, got '" + s + "'");
    }
    out[s.substr(0, eq)] = ParseDouble(s.substr(eq + 1), "--param " + s);
  }
  return out;
}

void CheckParamNames(const dc::Problem& p, const dc::Assignment& params) {
  for (const auto& [name, value] : params) {
    if (!p.find_param(name)) throw InputFailure("--param " + name + ": no such parameter");
  }
}

std::string Stem(const std::string& path) {
  std::filesystem::path p(path);
  return (p.parent_path() / p.stem()).string();
}

std::vector<std::string> ConicOrder(const dc::ReductionTrace& trace) {
  std::vector<std::string> order = trace.original.variables;
  for (const dc::TraceStep& s : trace.steps) {
    if (!s.fresh.empty()) order.push_back(s.fresh);
  }
  return order;
}

// ---------------------------------------------------------------------------

int CmdCheck(const std::string& file) {
  const dc::Problem p = ReadProblem(file);
  const dc::DcpVerdict v = dc::dcp_check(p);
  std::cout << "DCP: " << (v.conformant ? "conformant" : "not conformant") << "\n";
  std::cout << "objective: " << dc::curvature_name(v.objective_curvature)
            << (v.objective_ok ? "" : "  FAIL") << "\n";
  if (!v.objective_ok) std::cout << "  " << v.objective_message << "\n";
  for (std::size_t i = 0; i < v.constraints.size(); ++i) {
    const dc::ConstraintDiagnosis& d = v.constraints[i];
    std::cout << "#" << i << "  " << dc::curvature_name(v.lhs_info[i].curvature) << " "
              << dc::comparator_symbol(p.constraints[i].cmp) << " "
              << dc::curvature_name(v.rhs_info[i].curvature) << "  " << (d.ok ? "ok" : "FAIL")
              << "  " << dc::print(p.constraints[i]) << "\n";
    if (!d.ok) std::cout << "  " << d.message << "\n";
  }
  return v.conformant ? kOk : kFailed;
}

struct CanonArgs {
  std::string file;
  std::vector<std::string> params;
  std::string out;
  std::string trace;
  bool skip_verify = false;
  double tol = 1e-7;
  std::size_t samples = 200;
};

// Sampled soundness (final -> original) and completeness (original ->
// final) checks of the trace, plus agreement of the emitted conic rows.
bool VerifyCanon(const dc::CanonResult& r, const dc::Assignment& params, double tol,
                 std::size_t samples) {
  const dc::ReductionTrace& t = r.trace;
  if (!(dc::replay(t.original, t.steps).final_problem == t.final_problem)) {
    std::cerr << "verify: trace replay does not reproduce the final problem\n";
    return false;
  }
  dc::SampleOptions so;
  so.count = samples;
  so.max_draws = 2'000'000;
  so.tol = 0.0;
  const auto box_for = [](const dc::Problem& p) {
    return dc::SearchBox::uniform(p.variables, {-5.0, 5.0}, 2);
  };
  bool ok = true;
  const auto finals = dc::sample_feasible(t.final_problem, params, box_for(t.final_problem), so);
  for (const dc::Assignment& pt : finals) {
    const dc::Assignment back = dc::backmap(t, pt);
    const dc::Assignment env = dc::merged(params, back);
    const auto fv = dc::check_feasible(t.original, env, tol);
    if (!fv.feasible()) {
      std::cerr << "verify: backmapped point violates original constraint #" << fv.constraint
                << "\n";
      ok = false;
      break;
    }
    if (dc::objective_value(t.original, env) !=
        dc::objective_value(t.final_problem, dc::merged(params, pt))) {
      std::cerr << "verify: objective changed under backmap\n";
      ok = false;
      break;
    }
    Eigen::VectorXd x(static_cast<Eigen::Index>(r.conic.num_vars()));
    for (std::size_t j = 0; j < r.conic.num_vars(); ++j) {
      x[static_cast<Eigen::Index>(j)] = pt.at(r.conic.variables[j]);
    }
    const dc::PrimalVerdict pv = dc::check_primal(r.conic, x, tol);
    if (!pv.feasible) {
      std::cerr << "verify: emitted conic rows reject a final-feasible point: " << pv.reason
                << "\n";
      ok = false;
      break;
    }
  }
  const auto originals = dc::sample_feasible(t.original, params, box_for(t.original), so);
  for (const dc::Assignment& pt : originals) {
    const dc::Assignment fwd = dc::forward_map(t, pt, params);
    const auto fv = dc::check_feasible(t.final_problem, dc::merged(params, fwd), tol);
    if (!fv.feasible()) {
      std::cerr << "verify: forward-mapped point violates final constraint #" << fv.constraint
                << "\n";
      ok = false;
      break;
    }
  }
  std::cout << "verified: " << finals.size() << " final-feasible and " << originals.size()
            << " original-feasible samples\n";
  if (finals.empty() || originals.empty()) {
    std::cout << "note: no feasible samples found in [-5, 5] for one direction; "
                 "sampled check is vacuous there\n";
  }
  return ok;
}

int CmdCanon(const CanonArgs& a) {
  const dc::Problem p = ReadProblem(a.file);
  const dc::Assignment params = ParseParams(a.params);
  CheckParamNames(p, params);
  const dc::CanonResult r = dc::canonize(p, params);
  if (!a.skip_verify && !VerifyCanon(r, params, a.tol, a.samples)) return kFailed;
  const std::string out = a.out.empty() ? Stem(a.file) + ".cone" : a.out;
  const std::string trace = a.trace.empty() ? Stem(a.file) + ".trace" : a.trace;
  WriteFile(out, dc::write_conic(r.conic));
  WriteFile(trace, dc::write_trace(r.trace));
  std::size_t reductions = 0;
  for (const dc::TraceStep& s : r.trace.steps) {
    if (s.schema != dc::Schema::EliminateRedundant) ++reductions;
  }
  std::cout << "steps: " << r.trace.steps.size() << " (" << reductions << " reductions)\n";
  std::cout << "variables: " << r.conic.num_vars() << ", equality rows: " << r.conic.num_eq()
            << "\ncones:";
  for (const dc::ConeBlock& b : r.conic.cones) std::cout << " [" << b.to_string() << "]";
  std::cout << "\nwrote " << out << "\nwrote " << trace << "\n";
  return kOk;
}

struct VerifyArgs {
  std::string problem;
  std::string trace;
  std::string solution;
  std::vector<std::string> params;
  double tol = 1e-7;
};

int CmdVerify(const VerifyArgs& a) {
  const dc::Problem p = ReadProblem(a.problem);
  const dc::Assignment params = ParseParams(a.params);
  CheckParamNames(p, params);
  dc::ReductionTrace trace;
  dc::Solution sol;
  try {
    trace = dc::read_trace(ReadFile(a.trace), p);
    sol = dc::read_solution(ReadFile(a.solution));
  } catch (const dc::Error& e) {
    if (e.kind() == dc::ErrorKind::MalformedFile) throw InputFailure(e.what());
    throw;
  }
  const dc::ConicProblem cp = dc::emit(trace.final_problem, params, ConicOrder(trace));
  if (static_cast<std::size_t>(sol.primal.size()) != cp.num_vars()) {
    std::cout << "primal: FAIL solution has " << sol.primal.size() << " values, conic problem has "
              << cp.num_vars() << " variables\n";
    return kFailed;
  }
  const dc::PrimalVerdict pv = dc::check_primal(cp, sol.primal, a.tol);
  if (!pv.feasible) {
    std::cout << "primal: FAIL " << pv.reason << "\n";
    return kFailed;
  }
  std::cout << "primal: ok (conic objective " << dc::format_number(pv.objective) << ")\n";
  dc::Assignment final_point;
  for (std::size_t j = 0; j < cp.num_vars(); ++j) {
    final_point[cp.variables[j]] = sol.primal[static_cast<Eigen::Index>(j)];
  }
  const dc::Assignment back = dc::backmap(trace, final_point);
  const dc::Assignment env = dc::merged(params, back);
  const dc::FeasibilityVerdict fv = dc::check_feasible(p, env, a.tol);
  if (!fv.feasible()) {
    std::cout << "original: FAIL constraint #" << fv.constraint << " ("
              << dc::print(p.constraints[fv.constraint]) << ")";
    if (fv.status == dc::FeasibilityVerdict::Status::DomainError) {
      std::cout << " leaves the domain of " << fv.atom;
    } else {
      std::cout << " violated by " << dc::format_number(fv.residual);
    }
    std::cout << "\n";
    return kFailed;
  }
  const double objective = dc::objective_value(p, env);
  std::cout << "original: ok";
  for (const auto& [name, value] : back) std::cout << " " << name << "=" << dc::format_number(value);
  std::cout << "\nobjective: " << dc::format_number(objective) << "\n";
  if (sol.dual) {
    const dc::DualVerdict dv = dc::check_dual_bound(cp, *sol.dual, a.tol);
    if (!dv.accepted) {
      std::cout << "dual: FAIL " << dv.reason << "\n";
      return kFailed;
    }
    std::cout << "dual: ok, certified lower bound " << dc::format_number(dv.bound)
              << "\ngap: " << dc::format_number(objective - dv.bound) << "\n";
  }
  return kOk;
}

struct OracleArgs {
  std::string file;
  std::vector<std::string> params;
  std::vector<std::string> boxes;
  std::string default_box = "-5:5";
  std::size_t res = 41;
  std::string eliminate = "auto";
  std::string out;
  double tol = 1e-7;
  unsigned threads = 1;
  bool exhaustive = false;
};

dc::Range ParseRange(const std::string& text, const std::string& what) {
  const std::size_t colon = text.find(':', text[0] == '-' ? 1 : 0);
  if (colon == std::string::npos) throw InputFailure(what + " expects lo:hi, got '" + text + "'");
  dc::Range r{ParseDouble(text.substr(0, colon), what), ParseDouble(text.substr(colon + 1), what)};
  if (!(r.lo <= r.hi)) throw InputFailure(what + ": empty range '" + text + "'");
  return r;
}

int CmdSolveOracle(const OracleArgs& a) {
  dc::Problem p;
  dc::Assignment params = ParseParams(a.params);
  if (std::filesystem::path(a.file).extension() == ".cone") {
    try {
      p = dc::to_problem(dc::read_conic(ReadFile(a.file)));
    } catch (const dc::Error& e) {
      if (e.kind() == dc::ErrorKind::MalformedFile ||
          e.kind() == dc::ErrorKind::DimensionMismatch) {
        throw InputFailure(e.what());
      }
      throw;
    }
    if (!params.empty()) throw InputFailure("--param does not apply to a .cone file");
  } else {
    p = ReadProblem(a.file);
    CheckParamNames(p, params);
  }
  dc::SearchBox box = dc::SearchBox::uniform(p.variables, ParseRange(a.default_box, "--default-box"),
                                             a.res);
  for (const std::string& b : a.boxes) {
    const std::size_t eq = b.find('=');
    if (eq == std::string::npos) throw InputFailure("--box expects var=lo:hi, got '" + b + "'");
    const std::string name = b.substr(0, eq);
    if (!p.has_variable(name)) throw InputFailure("--box " + name + ": no such variable");
    box.ranges[name] = ParseRange(b.substr(eq + 1), "--box " + b);
  }
  dc::GridOptions go;
  // Inequalities must hold exactly on the lattice, so a reported point stays
  // feasible after back-mapping through nonlinear reductions; equalities
  // get the tolerance.
  go.tol = 0.0;
  go.eq_tol = a.tol;
  go.threads = a.threads;
  go.prune = !a.exhaustive;
  if (a.eliminate == "auto") {
    go.eliminate.mode = dc::Elimination::Mode::Auto;
  } else if (a.eliminate != "none") {
    go.eliminate = {dc::Elimination::Mode::Variable, a.eliminate};
  }
  dc::GridResult r;
  try {
    r = dc::grid_minimize(p, params, box, go);
  } catch (const dc::Error& e) {
    if (e.kind() != dc::ErrorKind::Infeasible) throw;
    std::cout << "infeasible on grid (" << e.detail() << ")\n";
    return kFailed;
  }
  dc::Solution sol;
  sol.primal.resize(static_cast<Eigen::Index>(p.variables.size()));
  for (std::size_t j = 0; j < p.variables.size(); ++j) {
    sol.primal[static_cast<Eigen::Index>(j)] = r.point.at(p.variables[j]);
  }
  const std::string out = a.out.empty() ? Stem(a.file) + ".sol" : a.out;
  WriteFile(out, dc::write_solution(sol));
  std::cout << "objective: " << dc::format_number(r.value) << "\n";
  for (const std::string& v : p.variables) {
    std::cout << "  " << v << " = " << dc::format_number(r.point.at(v))
              << (r.eliminated && *r.eliminated == v ? "  (eliminated)" : "") << "\n";
  }
  std::cout << "evaluated " << r.points_evaluated << " lattice points\nwrote " << out << "\n";
  return kOk;
}

struct StepArgs {
  std::string file;
  std::string schema;
  std::string path;
  std::vector<std::string> params;
  std::string fresh;
};

int CmdStep(const StepArgs& a) {
  const dc::Problem p = ReadProblem(a.file);
  const std::optional<dc::Schema> schema = dc::schema_from_name(a.schema);
  if (!schema) throw InputFailure("unknown schema '" + a.schema + "'");
  dc::StepOptions opts;
  opts.params = ParseParams(a.params);
  CheckParamNames(p, opts.params);
  if (!a.fresh.empty()) opts.fresh_name = a.fresh;
  dc::StepResult r;
  if (a.schema == "linearize") {
    r = dc::linearize(p, dc::OccurrencePath::parse(a.path), opts);
  } else if (a.schema == "graph_expand") {
    r = dc::graph_expand(p, dc::OccurrencePath::parse(a.path), opts);
  } else {
    r = dc::apply_step(p, *schema, a.path, opts);
  }
  std::cout << dc::print(r.problem);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dcpc: DCP checking and canonization to conic form"};
  app.require_subcommand(1);

  std::string check_file;
  auto* check = app.add_subcommand("check", "Check DCP conformance and print a curvature table");
  check->add_option("problem", check_file, "Problem file (.opt)")->required();

  CanonArgs canon_args;
  auto* canon = app.add_subcommand("canon", "Canonize to conic form and write .cone + trace");
  canon->add_option("problem", canon_args.file, "Problem file (.opt)")->required();
  canon->add_option("--param", canon_args.params, "Parameter binding name=value");
  canon->add_option("--out", canon_args.out, "Conic output path (default <problem>.cone)");
  canon->add_option("--trace", canon_args.trace, "Trace output path (default <problem>.trace)");
  canon->add_flag("--skip-verify", canon_args.skip_verify, "Skip the sampled soundness checks");
  canon->add_option("--tol", canon_args.tol, "Feasibility tolerance")->capture_default_str();
  canon->add_option("--samples", canon_args.samples, "Samples per verification direction")
      ->capture_default_str();

  VerifyArgs verify_args;
  auto* verify = app.add_subcommand("verify", "Check a conic solution against the original problem");
  verify->add_option("problem", verify_args.problem, "Original problem (.opt)")->required();
  verify->add_option("trace", verify_args.trace, "Trace written by canon")->required();
  verify->add_option("solution", verify_args.solution, "Solution file (.sol)")->required();
  verify->add_option("--param", verify_args.params, "Parameter binding name=value");
  verify->add_option("--tol", verify_args.tol, "Feasibility tolerance")->capture_default_str();

  OracleArgs oracle_args;
  auto* oracle = app.add_subcommand("solve-oracle", "Grid-search a problem and write a .sol");
  oracle->add_option("problem", oracle_args.file, "Problem (.opt) or conic problem (.cone)")
      ->required();
  oracle->add_option("--param", oracle_args.params, "Parameter binding name=value");
  oracle->add_option("--box", oracle_args.boxes, "Search range var=lo:hi");
  oracle->add_option("--default-box", oracle_args.default_box, "Range for unlisted variables")
      ->capture_default_str();
  oracle->add_option("--res", oracle_args.res, "Lattice points per axis")->capture_default_str();
  oracle->add_option("--eliminate", oracle_args.eliminate,
                     "Variable solved from an affine equality: auto, none, or a name")
      ->capture_default_str();
  oracle->add_option("--out", oracle_args.out, "Solution path (default <problem>.sol)");
  oracle->add_option("--tol", oracle_args.tol, "Equality tolerance")->capture_default_str();
  oracle->add_option("--threads", oracle_args.threads, "Threads for the exhaustive scan")
      ->capture_default_str();
  oracle->add_flag("--exhaustive", oracle_args.exhaustive,
                   "Scan every lattice point instead of branch and bound");

  StepArgs step_args;
  auto* step = app.add_subcommand("step", "Apply one reduction schema and print the result");
  step->add_option("problem", step_args.file, "Problem file (.opt)")->required();
  step->add_option("schema", step_args.schema,
                   "linearize[_antimono|_mono], graph_expand[_concave|_convex], "
                   "eliminate_redundant")
      ->required();
  step->add_option("path", step_args.path,
                   "Occurrence path such as c0/rhs/0/1, or indices 4,5 for eliminate_redundant")
      ->required();
  step->add_option("--param", step_args.params, "Parameter binding name=value");
  step->add_option("--fresh", step_args.fresh, "Name for the new variable");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadInput;
  }

  try {
    if (*check) return CmdCheck(check_file);
    if (*canon) return CmdCanon(canon_args);
    if (*verify) return CmdVerify(verify_args);
    if (*oracle) return CmdSolveOracle(oracle_args);
    if (*step) return CmdStep(step_args);
  } catch (const InputFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const dc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == dc::ErrorKind::ParseError || e.kind() == dc::ErrorKind::MalformedFile
               ? kBadInput
               : kFailed;
  }
  return kFailed;
}
