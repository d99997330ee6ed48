// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dcpcanon/atoms.hpp"
#include "dcpcanon/conic.hpp"
#include "dcpcanon/dcp.hpp"
#include "dcpcanon/dsl.hpp"
#include "dcpcanon/error.hpp"
#include "dcpcanon/oracle.hpp"
#include "dcpcanon/reduce.hpp"
#include "test_support.hpp"

namespace dcpcanon {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

// Collects the first few failure messages of one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    ++failures_;
    if (failures_ <= 5) messages_ << "\n    " << what;
  }
  bool ok() const { return failures_ == 0; }
  std::string messages() const { return messages_.str(); }
  std::size_t failures() const { return failures_; }

 private:
  std::size_t failures_ = 0;
  std::ostringstream messages_;
};

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

std::string Num(double v) { return format_number(v); }

#ifdef DCPC_PATH
int RunCommand(const std::string& cmd) {
  const int status = std::system((cmd + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}
#endif

// 1. The trace canon writes for the source problem replays to the four
// printed stages, independent of the parameter values bound for emission.
std::string Criterion1(Check& check) {
  const Problem p1 = testing::load_corpus("prob1.opt");
  const fs::path dir = fs::temp_directory_path() / "dcpcanon_acceptance";
  fs::create_directories(dir);
  std::vector<std::string> traces;
  double worst = 0.0;
  for (const std::string params : {"--param a=1 --param b=1 --param c=1 --param d=1",
                                   "--param a=2 --param b=-1 --param c=5 --param d=0.5"}) {
    const std::string trace_path = (dir / "star.trace").string();
    const auto start = Clock::now();
#ifdef DCPC_PATH
    const int code = RunCommand(std::string(DCPC_PATH) + " canon " + testing::corpus_path("prob1.opt") + " " +
                                params + " --out " + (dir / "star.cone").string() + " --trace " + trace_path);
#else
    // Built without the command-line tool: run the same pipeline in-process.
    Assignment bound;
    std::istringstream words(params);
    for (std::string flag, binding; words >> flag >> binding;) {
      const auto eq = binding.find('=');
      bound[binding.substr(0, eq)] = std::stod(binding.substr(eq + 1));
    }
    std::ofstream(trace_path) << write_trace(canonize(p1, bound).trace);
    const int code = 0;
#endif
    worst = std::max(worst, Seconds(start));
    check.expect(code == 0, "canon exited with " + std::to_string(code));
    if (code != 0) continue;
    traces.push_back(testing::read_text(trace_path));
    const ReductionTrace trace = read_trace(traces.back(), p1);
    check.expect(trace.steps.size() == 4, "trace has " + std::to_string(trace.steps.size()) + " steps");
    const std::vector<Problem> stages = trace.stages();
    for (std::size_t k = 1; k < stages.size() && k < 5; ++k) {
      const std::string name = "prob" + std::to_string(k + 1) + ".opt";
      check.expect(stages[k] == testing::load_corpus(name), "stage " + std::to_string(k + 1) + " differs from " + name);
    }
  }
  check.expect(traces.size() == 2 && traces[0] == traces[1], "trace depends on parameter values");
  check.expect(worst < 1.0, "canon took " + Num(worst) + " s");
  return "4-step trace reproduces prob2..prob5 exactly; canon " + Num(std::round(worst * 1000) / 1000) + " s";
}

// 2. Cone multiset and equality count of the emitted conic problem.
std::string Criterion2(Check& check) {
  const CanonResult r = canonize(testing::load_corpus("prob1.opt"), testing::star_params(1, 1, 1, 1));
  std::vector<std::string> cones;
  for (const ConeBlock& b : r.conic.cones) cones.push_back(b.to_string());
  std::sort(cones.begin(), cones.end());
  const std::vector<std::string> expected = {"EXP", "EXP", "ORTHANT 1", "SOC 3"};
  check.expect(cones == expected, "unexpected cone multiset");
  check.expect(r.conic.num_eq() == 1, "equality rows: " + std::to_string(r.conic.num_eq()));
  std::string listed;
  for (const ConeBlock& b : r.conic.cones) listed += "[" + b.to_string() + "]";
  return "1 equality row, cones " + listed;
}

// 3. Back-mapping of final-problem samples and forward-mapping of source
// samples.
std::string Criterion3(Check& check) {
  const auto start = Clock::now();
  const Assignment params = testing::star_params(1, 1, 1, 1);
  const CanonResult r = canonize(testing::load_corpus("prob1.opt"), params);
  const Problem& p1 = r.trace.original;
  const Problem& p5 = r.trace.final_problem;
  SampleOptions so;
  so.count = 1000;
  so.seed = 2024;
  const auto finals = sample_feasible(p5, params, SearchBox::uniform(p5.variables, {-5, 5}, 2), so);
  check.expect(finals.size() >= 1000, "only " + std::to_string(finals.size()) + " final samples");
  std::size_t back_failures = 0;
  for (const Assignment& pt : finals) {
    const Assignment full = merged(backmap(r.trace, pt), params);
    const bool ok = check_feasible(p1, full, 1e-7).feasible() &&
                    objective_value(p1, full) == objective_value(p5, merged(pt, params));
    back_failures += ok ? 0 : 1;
  }
  check.expect(back_failures == 0, std::to_string(back_failures) + " back-mapped points fail");
  const auto originals = sample_feasible(p1, params, SearchBox::uniform(p1.variables, {-5, 5}, 2), so);
  check.expect(originals.size() >= 1000, "only " + std::to_string(originals.size()) + " source samples");
  std::size_t fwd_failures = 0;
  for (const Assignment& pt : originals) {
    const Assignment full = merged(forward_map(r.trace, pt, params), params);
    const bool ok = check_feasible(p5, full, 1e-7).feasible() &&
                    objective_value(p5, full) == objective_value(p1, merged(pt, params));
    fwd_failures += ok ? 0 : 1;
  }
  check.expect(fwd_failures == 0, std::to_string(fwd_failures) + " forward-mapped points fail");
  const double seconds = Seconds(start);
  check.expect(seconds < 30.0, "took " + Num(seconds) + " s");
  return std::to_string(finals.size() - back_failures) + "/" + std::to_string(finals.size()) +
         " back-mapped and " + std::to_string(originals.size() - fwd_failures) + "/" +
         std::to_string(originals.size()) + " forward-mapped samples feasible; " +
         Num(std::round(seconds * 100) / 100) + " s";
}

// 4. Grid optima of the source problem and of the interpreted conic form
// agree; values are frozen from the first oracle run.
struct Instance {
  double a, b, c, d;
  double golden;  // frozen oracle optimum shared by both problems
};

std::string Criterion4(Check& check) {
  const std::vector<Instance> instances = {
      {1, 1, 1, 1, 1.2800000000000002},
      {2, 1, 1, 3, 1.4075000000000002},
      {1, 2, 1, 1, 0.87000000000000099},
  };
  const Problem p1 = testing::load_corpus("prob1.opt");
  SearchBox box;
  box.ranges = {{"x", {0, 4}}, {"y", {-4, 2}}, {"t1", {0, 2.5}}, {"t2", {0, 2.5}}, {"t3", {0, 2.5}}};
  box.resolution = 401;
  GridOptions opts;
  opts.tol = 1e-6;
  opts.eliminate = {Elimination::Mode::Variable, "x"};
  std::string summary;
  for (const Instance& inst : instances) {
    const Assignment params = testing::star_params(inst.a, inst.b, inst.c, inst.d);
    const GridResult r1 = grid_minimize(p1, params, box, opts);
    const double cv1 = cell_objective_variation(p1, params, box, r1, opts);
    const CanonResult canon = canonize(p1, params);
    const Problem p5 = to_problem(canon.conic);
    GridOptions pruned = opts;
    pruned.prune = true;
    const GridResult r5 = grid_minimize(p5, {}, box, pruned);
    const double cv5 = cell_objective_variation(p5, {}, box, r5, pruned);
    const Assignment back = merged(backmap(canon.trace, r5.point), params);
    const double v5 = objective_value(p1, back);
    const double allowed = 2.0 * std::max(cv1, cv5);
    const std::string tag = "(" + Num(inst.a) + "," + Num(inst.b) + "," + Num(inst.c) + "," + Num(inst.d) + ")";
    check.expect(check_feasible(p1, back, 1e-6).feasible(), tag + " back-mapped optimum infeasible");
    check.expect(std::fabs(r1.value - v5) <= allowed,
                 tag + " optima " + Num(r1.value) + " vs " + Num(v5) + " exceed " + Num(allowed));
    check.expect(std::fabs(r1.value - inst.golden) <= 1e-12, tag + " source optimum " + Num(r1.value) +
                                                                 " differs from frozen " + Num(inst.golden));
    check.expect(std::fabs(v5 - inst.golden) <= 1e-12,
                 tag + " conic optimum " + Num(v5) + " differs from frozen " + Num(inst.golden));
    summary += (summary.empty() ? "" : ", ") + tag + " " + Num(std::round(r1.value * 1e6) / 1e6) + "/" +
               Num(std::round(v5 * 1e6) / 1e6);
  }
  return summary;
}

// 5. DCP verdicts of the bundled corpus.
std::string Criterion5(Check& check) {
  const auto entries = testing::corpus_expectations();
  check.expect(entries.size() >= 10, "corpus has only " + std::to_string(entries.size()) + " problems");
  std::size_t rejected = 0;
  for (const auto& entry : entries) {
    const DcpVerdict v = dcp_check(testing::load_corpus(entry.file));
    std::vector<std::size_t> failing;
    for (const auto& c : v.constraints) {
      if (!c.ok) failing.push_back(c.constraint);
    }
    check.expect(v.conformant == entry.conformant && !v.objective_ok == entry.objective_fails &&
                     failing == entry.failing,
                 entry.file + " verdict differs");
    rejected += entry.conformant ? 0 : 1;
  }
  for (int k = 1; k <= 5; ++k) {
    const std::string name = "prob" + std::to_string(k) + ".opt";
    check.expect(dcp_check(testing::load_corpus(name)).conformant, name + " not conformant");
  }
  return std::to_string(entries.size()) + " problems, " + std::to_string(rejected) +
         " rejected with the expected failing constraints";
}

// 6. Exponential dual cone against inner products, then weak duality.
std::string Criterion6(Check& check) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> d(-3.0, 3.0);
  const ConeBlock ec = ConeBlock::exp();
  std::size_t members = 0;
  std::size_t negative = 0;
  std::size_t disagreements = 0;
  for (int i = 0; i < 10000; ++i) {
    Eigen::VectorXd z(3);
    if (i % 2 == 0) {
      z << d(rng), d(rng), d(rng);
    } else {
      z = testing::random_dual_cone_point(ec, rng);
    }
    const bool member = dual_cone_member(ec, std::span<const double>(z.data(), 3), 0.0);
    const double margin = testing::exp_dual_margin(Eigen::Vector3d(z[0], z[1], z[2]));
    if (!(std::isfinite(margin) && std::fabs(margin) < 1e-7) && member != (margin >= 0.0)) ++disagreements;
    if (!member) continue;
    ++members;
    for (int k = 0; k < 10; ++k) {
      const Eigen::VectorXd s = testing::random_cone_point(ec, rng);
      if (z.dot(s) < -1e-9) ++negative;
    }
  }
  check.expect(negative == 0, std::to_string(negative) + " negative inner products");
  check.expect(disagreements == 0, std::to_string(disagreements) + " disagreements with the inner-product oracle");
  check.expect(members >= 5000, "only " + std::to_string(members) + " dual members sampled");
  if (!check.ok()) return "dual cone formula rejected; weak duality suite skipped";

  double worst_gap = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 1000; ++i) {
    testing::RandomConic rc = testing::random_conic(rng);
    const DualCertificate cert = testing::random_certificate_setting_c(rc.problem, rng);
    const PrimalVerdict pv = check_primal(rc.problem, rc.feasible_x, 1e-9);
    const DualVerdict dv = check_dual_bound(rc.problem, cert, 1e-9);
    check.expect(pv.feasible, "primal point rejected: " + pv.reason);
    check.expect(dv.accepted, "certificate rejected: " + dv.reason);
    if (!pv.feasible || !dv.accepted) continue;
    check.expect(dv.bound <= pv.objective + 1e-6, "bound " + Num(dv.bound) + " > objective " + Num(pv.objective));
    worst_gap = std::min(worst_gap, pv.objective - dv.bound);
  }
  return std::to_string(members) + " of 10000 dual samples in K*, " + std::to_string(negative) +
         " negative inner products; 1000 pairs, smallest objective - bound " + Num(worst_gap);
}

// 7. Round-trips of problem text, conic files and solution files.
std::string Criterion7(Check& check) {
  std::size_t problems = 0;
  for (const auto& entry : testing::corpus_expectations()) {
    const Problem p = testing::load_corpus(entry.file);
    const std::string text = print(p);
    check.expect(parse(text) == p && print(parse(text)) == text, entry.file + " does not round-trip");
    ++problems;
  }
  std::mt19937_64 rng(7);
  std::vector<ConicProblem> conics = {emit(testing::load_corpus("prob5.opt"), testing::star_params(2, 1, 1, 3))};
  for (int i = 0; i < 500; ++i) conics.push_back(testing::random_conic(rng).problem);
  for (ConicProblem& cp : conics) {
    const DualCertificate cert = testing::random_certificate_setting_c(cp, rng);
    const std::string text = write_conic(cp);
    check.expect(read_conic(text) == cp && write_conic(read_conic(text)) == text, "conic file changed");
    const Solution s{Eigen::VectorXd::Random(static_cast<Eigen::Index>(cp.num_vars())), cert};
    const Solution back = read_solution(write_solution(s));
    check.expect(back.primal == s.primal && back.dual && back.dual->y == cert.y && back.dual->z == cert.z,
                 "solution file changed");
  }
  return std::to_string(problems) + " problems, " + std::to_string(conics.size()) + " conic and solution files";
}

// 8. Graph implementations of sqrt and log describe the atom's value.
std::string Criterion8(Check& check) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> arg(1e-3, 10.0);
  GridSweep grid;
  grid.lo = -20.0;
  grid.hi = 20.0;
  grid.step = 1e-3;
  for (const std::string name : {"sqrt", "log"}) {
    const GraphImplementation gi = *graph_impl(name);
    for (int i = 0; i < 100; ++i) {
      const double a = arg(rng);
      const IsGreatestVerdict v = check_is_greatest(gi, std::span<const double>(&a, 1), grid);
      check.expect(v.confirmed, name + "(" + Num(a) + "): " + v.reason);
    }
  }
  return "sqrt and log confirmed on 100 arguments each";
}

}  // namespace
}  // namespace dcpcanon

int main() {
  using Criterion = std::function<std::string(dcpcanon::Check&)>;
  const std::vector<std::pair<std::string, Criterion>> criteria = {
      {"golden reduction chain", dcpcanon::Criterion1},
      {"cone assignment", dcpcanon::Criterion2},
      {"reduction soundness", dcpcanon::Criterion3},
      {"optimum preservation", dcpcanon::Criterion4},
      {"DCP corpus verdicts", dcpcanon::Criterion5},
      {"weak duality", dcpcanon::Criterion6},
      {"round-trips", dcpcanon::Criterion7},
      {"graph implementations", dcpcanon::Criterion8},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    dcpcanon::Check check;
    std::string detail;
    try {
      detail = criteria[i].second(check);
    } catch (const std::exception& e) {
      check.expect(false, std::string("exception: ") + e.what());
    }
    const bool ok = check.ok();
    failed += ok ? 0 : 1;
    std::cout << (ok ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first;
    if (!detail.empty()) std::cout << ": " << detail;
    std::cout << check.messages() << "\n";
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size()
            << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
