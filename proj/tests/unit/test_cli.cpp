#include <gtest/gtest.h>
#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "dcpcanon/conic.hpp"
#include "test_support.hpp"

namespace dcpcanon {
namespace {

namespace fs = std::filesystem;

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult Dcpc(const std::string& args) {
  const std::string cmd = std::string(DCPC_PATH) + " " + args + " 2>&1";
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.output.append(buf.data(), n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string Corpus(const std::string& name) { return testing::corpus_path(name); }

const std::string kStarParams = "--param a=1 --param b=1 --param c=1 --param d=1";

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("dcpc_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string Path(const std::string& name) const { return (dir_ / name).string(); }
  void Write(const std::string& name, const std::string& text) const {
    std::ofstream(Path(name)) << text;
  }

  fs::path dir_;
};

TEST_F(Cli, CheckConformant) {
  const RunResult r = Dcpc("check " + Corpus("prob1.opt"));
  EXPECT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("DCP: conformant"), std::string::npos);
  EXPECT_NE(r.output.find("#0  convex <= concave  ok  exp(y) <= log(a * sqrt(x) + b)"), std::string::npos)
      << r.output;
}

TEST_F(Cli, CheckReportsEveryFailure) {
  const RunResult r = Dcpc("check " + Corpus("unsigned_param_sqrt.opt"));
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.output.find("DCP: not conformant"), std::string::npos);
  EXPECT_NE(r.output.find("constraint #0: required concave, got unknown at a * sqrt(x)"), std::string::npos);
  EXPECT_NE(r.output.find("constraint #3: required concave, got unknown at a * sqrt(x)"), std::string::npos);
}

TEST_F(Cli, ParseErrorsExitTwo) {
  const RunResult r = Dcpc("check " + Corpus("malformed.opt"));
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.output.find("malformed.opt:4:3:"), std::string::npos) << r.output;
  EXPECT_EQ(Dcpc("check " + Path("missing.opt")).exit_code, 2);
  EXPECT_EQ(Dcpc("").exit_code, 2);
  EXPECT_EQ(Dcpc("canon " + Corpus("prob1.opt") + " --param a").exit_code, 2);
  EXPECT_EQ(Dcpc("solve-oracle " + Corpus("prob1.opt") + " --res two").exit_code, 2);
}

TEST_F(Cli, CanonWritesConeAndTrace) {
  const RunResult r = Dcpc("canon " + Corpus("prob1.opt") + " " + kStarParams + " --out " + Path("p.cone") +
                          " --trace " + Path("p.trace"));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("cones: [EXP] [SOC 3] [EXP] [ORTHANT 1]"), std::string::npos) << r.output;
  const ConicProblem cp = read_conic(testing::read_text(Path("p.cone")));
  EXPECT_EQ(cp.variables, (std::vector<std::string>{"x", "y", "t1", "t2", "t3"}));
  EXPECT_EQ(cp.num_eq(), 1u);
  const std::string trace = testing::read_text(Path("p.trace"));
  EXPECT_EQ(trace.rfind("TRACE 1\nSTEP 1 linearize_antimono AT c0/lhs FRESH t1", 0), 0u) << trace;
}

TEST_F(Cli, CanonRejectsNonDcpAndUnbound) {
  const RunResult r = Dcpc("canon " + Corpus("abs_times_log.opt") + " --out " + Path("x.cone") + " --trace " +
                          Path("x.trace"));
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.output.find("NotConeRepresentable"), std::string::npos);
  const RunResult u = Dcpc("canon " + Corpus("prob1.opt") + " --param a=1 --out " + Path("y.cone"));
  EXPECT_EQ(u.exit_code, 1);
  EXPECT_NE(u.output.find("UnboundParameter: unbound parameter b"), std::string::npos) << u.output;
  const RunResult s = Dcpc("canon " + Corpus("prob1.opt") + " --param a=-1 --param b=1 --param c=1 --param d=1");
  EXPECT_EQ(s.exit_code, 1);
  EXPECT_NE(s.output.find("SignViolation"), std::string::npos) << s.output;
}

TEST_F(Cli, PipelineCanonSolveVerify) {
  ASSERT_EQ(Dcpc("canon " + Corpus("prob1.opt") + " " + kStarParams + " --out " + Path("p.cone") + " --trace " +
                Path("p.trace"))
                .exit_code,
            0);
  const RunResult solve = Dcpc("solve-oracle " + Path("p.cone") + " --out " + Path("p.sol"));
  ASSERT_EQ(solve.exit_code, 0) << solve.output;
  EXPECT_NE(solve.output.find("objective: 1.75"), std::string::npos) << solve.output;
  const RunResult exhaustive = Dcpc("solve-oracle " + Path("p.cone") + " --exhaustive --out " + Path("e.sol"));
  ASSERT_EQ(exhaustive.exit_code, 0);
  EXPECT_EQ(testing::read_text(Path("p.sol")), testing::read_text(Path("e.sol")));

  const RunResult ok = Dcpc("verify " + Corpus("prob1.opt") + " " + Path("p.trace") + " " + Path("p.sol") + " " +
                           kStarParams);
  EXPECT_EQ(ok.exit_code, 0) << ok.output;
  EXPECT_NE(ok.output.find("primal: ok"), std::string::npos);
  EXPECT_NE(ok.output.find("original: ok x=1.75 y=-0.75"), std::string::npos) << ok.output;

  Write("bad.sol", "SOLUTION 1\nPRIMAL 3 0 1 1 1\nEND\n");
  const RunResult bad = Dcpc("verify " + Corpus("prob1.opt") + " " + Path("p.trace") + " " + Path("bad.sol") +
                            " " + kStarParams);
  EXPECT_EQ(bad.exit_code, 1);
  EXPECT_NE(bad.output.find("primal: FAIL equality row 0 residual 2"), std::string::npos) << bad.output;

  Write("short.sol", "SOLUTION 1\nPRIMAL 3 0\nEND\n");
  EXPECT_EQ(Dcpc("verify " + Corpus("prob1.opt") + " " + Path("p.trace") + " " + Path("short.sol") + " " +
                kStarParams)
                .exit_code,
            1);
  Write("junk.sol", "SOLUTION\n");
  EXPECT_EQ(Dcpc("verify " + Corpus("prob1.opt") + " " + Path("p.trace") + " " + Path("junk.sol") + " " +
                kStarParams)
                .exit_code,
            2);
}

TEST_F(Cli, VerifyChecksDualCertificate) {
  Write("lin.opt", "minimization\n  !vars x\n  !objective x\n  !constraints\n    x >= 1\n");
  ASSERT_EQ(Dcpc("canon " + Path("lin.opt")).exit_code, 0);
  Write("good.sol", "SOLUTION 1\nPRIMAL 1.5\nDUAL_EQ\nDUAL_CONE 1\nEND\n");
  const RunResult good = Dcpc("verify " + Path("lin.opt") + " " + Path("lin.trace") + " " + Path("good.sol"));
  EXPECT_EQ(good.exit_code, 0) << good.output;
  EXPECT_NE(good.output.find("dual: ok, certified lower bound 1"), std::string::npos) << good.output;
  EXPECT_NE(good.output.find("gap: 0.5"), std::string::npos);
  Write("bad.sol", "SOLUTION 1\nPRIMAL 1.5\nDUAL_EQ\nDUAL_CONE -1\nEND\n");
  const RunResult bad = Dcpc("verify " + Path("lin.opt") + " " + Path("lin.trace") + " " + Path("bad.sol"));
  EXPECT_EQ(bad.exit_code, 1);
  EXPECT_NE(bad.output.find("dual: FAIL"), std::string::npos) << bad.output;
}

TEST_F(Cli, VerifyRejectsForeignTrace) {
  ASSERT_EQ(Dcpc("canon " + Corpus("prob1.opt") + " " + kStarParams + " --out " + Path("p.cone") + " --trace " +
                Path("p.trace"))
                .exit_code,
            0);
  Write("p.sol", "SOLUTION 1\nPRIMAL 0 0\nEND\n");
  const RunResult r = Dcpc("verify " + Corpus("norm_ball.opt") + " " + Path("p.trace") + " " + Path("p.sol"));
  EXPECT_NE(r.exit_code, 0);
  EXPECT_NE(r.output.find("TraceMismatch"), std::string::npos) << r.output;
}

TEST_F(Cli, SolveOracleOnProblemFile) {
  const RunResult r = Dcpc("solve-oracle " + Corpus("prob1.opt") + " " + kStarParams +
                          " --box x=0:4 --box y=-4:2 --res 401 --out " + Path("s.sol"));
  EXPECT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("objective: 1.28"), std::string::npos) << r.output;
  Write("neg.opt", "minimization\n  !vars x\n  !objective x\n  !constraints\n    sqrt(x) <= 1\n");
  const RunResult inf = Dcpc("solve-oracle " + Path("neg.opt") + " --box x=-2:-1 --out " + Path("n.sol"));
  EXPECT_EQ(inf.exit_code, 1);
  EXPECT_NE(inf.output.find("infeasible on grid"), std::string::npos) << inf.output;
  EXPECT_EQ(Dcpc("solve-oracle " + Path("neg.opt") + " --box x=oops").exit_code, 2);
}

TEST_F(Cli, StepPrintsNextProblem) {
  const RunResult r = Dcpc("step " + Corpus("prob1.opt") + " linearize c0/lhs");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_EQ(r.output, testing::read_text(Corpus("prob2.opt")));
  const RunResult named = Dcpc("step " + Corpus("prob1.opt") + " linearize_antimono c0/lhs --fresh w");
  EXPECT_EQ(named.exit_code, 0);
  EXPECT_NE(named.output.find("!vars w x y"), std::string::npos) << named.output;
  const RunResult bad = Dcpc("step " + Corpus("prob1.opt") + " graph_expand c0/lhs");
  EXPECT_EQ(bad.exit_code, 1);
  EXPECT_NE(bad.output.find("NoGraphImpl"), std::string::npos);
  const RunResult elim = Dcpc("step " + Corpus("prob4.opt") + " eliminate_redundant 5,6");
  EXPECT_EQ(elim.exit_code, 0);
  EXPECT_EQ(elim.output, testing::read_text(Corpus("prob5.opt")));
  EXPECT_EQ(Dcpc("step " + Corpus("prob1.opt") + " nonsense c0/lhs").exit_code, 2);
}

}  // namespace
}  // namespace dcpcanon
