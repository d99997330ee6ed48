#include <gtest/gtest.h>

#include <cmath>

#include "dcpcanon/dsl.hpp"
#include "dcpcanon/error.hpp"
#include "dcpcanon/expr.hpp"
#include "dcpcanon/problem.hpp"
#include "test_support.hpp"

namespace dcpcanon {
namespace {

Expr X() { return Expr::variable("x"); }
Expr Y() { return Expr::variable("y"); }
Expr C(double v) { return Expr::constant(v); }

TEST(Expr, StructuralEqualityAndPaths) {
  const Expr e = log(add(mul(Expr::parameter("a"), sqrt(X())), Expr::parameter("b")));
  const Expr same = log(add(mul(Expr::parameter("a"), sqrt(X())), Expr::parameter("b")));
  EXPECT_EQ(e, same);
  EXPECT_NE(e, log(add(mul(Expr::parameter("a"), sqrt(Y())), Expr::parameter("b"))));
  const std::vector<std::size_t> path{0, 0, 1};
  EXPECT_EQ(e.at(path), sqrt(X()));
  const Expr replaced = e.replace_at(path, Expr::variable("t2"));
  EXPECT_EQ(print(replaced), "log(a * t2 + b)");
  EXPECT_TRUE(e.references("x"));
  EXPECT_FALSE(replaced.references("x"));
  const std::vector<std::size_t> bad{0, 5};
  EXPECT_THROW(e.at(bad), Error);
}

TEST(Expr, ReplaceAllHitsEveryCopy) {
  const Expr e = add(sqrt(X()), mul(C(2), sqrt(X())));
  EXPECT_EQ(print(e.replace_all(sqrt(X()), Expr::variable("t"))), "t + 2 * t");
}

TEST(Expr, PostorderVisitsChildrenFirst) {
  const Expr e = add(exp(X()), Y());
  std::vector<std::string> seen;
  e.visit_postorder([&](const Expr& n, const std::vector<std::size_t>&) { seen.push_back(print(n)); });
  EXPECT_EQ(seen, (std::vector<std::string>{"x", "exp(x)", "y", "exp(x) + y"}));
}

TEST(Expr, ApplyRejectsBadArityAndExponent) {
  EXPECT_THROW(Expr::apply(Op::Add, {X()}), Error);
  EXPECT_THROW(Expr::apply(Op::Pow, {X()}, 0), Error);
}

TEST(Problem, EvalAndDomainErrors) {
  const Assignment pt{{"x", 4.0}, {"y", 0.0}, {"a", 1.0}, {"b", 1.0}};
  EXPECT_DOUBLE_EQ(eval(log(add(mul(Expr::parameter("a"), sqrt(X())), Expr::parameter("b"))), pt),
                   std::log(3.0));
  EXPECT_THROW(eval(sqrt(neg(X())), pt), DomainError);
  EXPECT_THROW(eval(log(Y()), pt), DomainError);
  EXPECT_THROW(eval(div(X(), Y()), pt), DomainError);
  EXPECT_THROW(eval(Expr::variable("z"), pt), Error);
  try {
    eval(sqrt(sub(Y(), C(1))), pt);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_EQ(e.atom(), "sqrt");
    EXPECT_EQ(e.argument(), -1.0);
  }
}

TEST(Problem, HoldsRespectsStrictness) {
  const Assignment pt{{"x", 1.0}};
  const Constraint le{X(), Comparator::Le, C(1.0 - 1e-9)};
  EXPECT_TRUE(holds(le, pt, 1e-8));
  EXPECT_FALSE(holds(le, pt, 0.0));
  const Constraint lt{X(), Comparator::Lt, C(1.0)};
  EXPECT_FALSE(holds(lt, pt, 1e-3));
  const Constraint eq{X(), Comparator::Eq, C(1.0 + 1e-9)};
  EXPECT_TRUE(holds(eq, pt, 1e-8));
  EXPECT_FALSE(holds(eq, pt, 1e-10));
  EXPECT_DOUBLE_EQ(residual(Constraint{X(), Comparator::Ge, C(3.0)}, pt), 2.0);
}

TEST(Problem, MinimizeXOverXAtLeastOne) {
  const Problem p = parse("minimization !vars x !objective x !constraints x >= 1");
  EXPECT_TRUE(check_feasible(p, {{"x", 1.0}}, 0.0).feasible());
  const FeasibilityVerdict v = check_feasible(p, {{"x", 0.5}}, 1e-9);
  EXPECT_EQ(v.status, FeasibilityVerdict::Status::Violated);
  EXPECT_EQ(v.constraint, 0u);
  EXPECT_DOUBLE_EQ(v.residual, 0.5);
  EXPECT_DOUBLE_EQ(objective_value(p, {{"x", 2.0}}), 2.0);
}

TEST(Problem, SourceProblemFeasibility) {
  const Problem p = testing::load_corpus("prob1.opt");
  Assignment pt = testing::star_params(1, 1, 1, 1);
  pt["x"] = 2.0;
  pt["y"] = -1.0;
  EXPECT_TRUE(check_feasible(p, pt, 1e-9).feasible());
  pt["x"] = -1.0;
  pt["y"] = 2.0;
  const FeasibilityVerdict v = check_feasible(p, pt, 1e-9);
  EXPECT_EQ(v.status, FeasibilityVerdict::Status::DomainError);
  EXPECT_EQ(v.constraint, 0u);
  EXPECT_EQ(v.atom, "sqrt");
}

TEST(Problem, FeasibilityAndBoundingForms) {
  const Problem p = parse("minimization !vars x !objective x !constraints x >= 1");
  const Problem f = to_feasibility(p);
  EXPECT_TRUE(f.objective.is_constant());
  EXPECT_EQ(f.objective.value(), 0.0);
  EXPECT_EQ(f.constraints, p.constraints);
  const Problem b = bound_problem(p, 0.5);
  ASSERT_EQ(b.constraints.size(), 2u);
  EXPECT_EQ(print(b.constraints[1]), "x <= 0.5");
  // x >= 1 and x <= 0.5 is infeasible: 0.5 is a valid lower bound.
  for (double x : {0.0, 0.5, 1.0, 2.0}) EXPECT_FALSE(check_feasible(b, {{"x", x}}, 0.0).feasible());
}

TEST(Problem, ValidateCatchesDuplicatesAndUnresolved) {
  Problem p;
  p.variables = {"x", "x"};
  EXPECT_THROW(p.validate(), Error);
  p.variables = {"x"};
  p.objective = Expr::variable("y");
  EXPECT_THROW(p.validate(), Error);
  p.objective = Expr::parameter("x");
  EXPECT_THROW(p.validate(), Error);
  p.objective = X();
  EXPECT_NO_THROW(p.validate());
}

TEST(Problem, ParameterBindingChecks) {
  const Problem p = testing::load_corpus("prob1.opt");
  EXPECT_NO_THROW(check_params_bound(p, testing::star_params(1, 1, 1, 1)));
  try {
    check_params_bound(p, {{"a", 1}, {"b", 1}, {"c", 1}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnboundParameter);
    EXPECT_NE(std::string(e.what()).find("unbound parameter d"), std::string::npos);
  }
  try {
    check_params_bound(p, testing::star_params(-1, 1, 1, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SignViolation);
  }
}

TEST(Problem, OrientationAndMerge) {
  const Constraint c{X(), Comparator::Ge, Y()};
  const Constraint o = oriented(c);
  EXPECT_EQ(o.lhs, Y());
  EXPECT_EQ(o.cmp, Comparator::Le);
  EXPECT_EQ(oriented(Constraint{X(), Comparator::Gt, Y()}).cmp, Comparator::Lt);
  const Assignment m = merged({{"a", 1.0}, {"b", 2.0}}, {{"b", 3.0}});
  EXPECT_EQ(m.at("a"), 1.0);
  EXPECT_EQ(m.at("b"), 3.0);
}

}  // namespace
}  // namespace dcpcanon
