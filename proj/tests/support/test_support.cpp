#include "test_support.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "dcpcanon/dsl.hpp"

namespace dcpcanon::testing {

std::string corpus_path(const std::string& name) {
  return std::string(DCPCANON_CORPUS_DIR) + "/" + name;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Problem load_corpus(const std::string& name) { return parse(read_text(corpus_path(name))); }

std::vector<CorpusEntry> corpus_expectations() {
  std::istringstream in(read_text(corpus_path("expected.txt")));
  std::vector<CorpusEntry> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    CorpusEntry e;
    std::string verdict;
    std::string failing;
    ls >> e.file >> verdict >> failing;
    e.conformant = verdict == "conformant";
    if (failing == "obj") {
      e.objective_fails = true;
    } else if (failing != "-") {
      std::istringstream fs(failing);
      std::string part;
      while (std::getline(fs, part, ',')) e.failing.push_back(std::stoul(part));
    }
    out.push_back(e);
  }
  return out;
}

Assignment star_params(double a, double b, double c, double d) {
  return {{"a", a}, {"b", b}, {"c", c}, {"d", d}};
}

namespace {

double Uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace

Expr random_expr(std::mt19937_64& rng, const std::vector<std::string>& vars,
                 const std::vector<std::string>& params, int depth) {
  auto pick = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };
  if (depth <= 0 || pick(4) == 0) {
    const int kind = pick(params.empty() ? 2 : 3);
    if (kind == 0 || vars.empty()) {
      static const double kConstants[] = {0.0, 1.0, 2.0, 0.5, -1.0, -3.25, 10.0};
      return Expr::constant(kConstants[pick(7)]);
    }
    if (kind == 1) return Expr::variable(vars[static_cast<std::size_t>(pick(static_cast<int>(vars.size())))]);
    return Expr::parameter(params[static_cast<std::size_t>(pick(static_cast<int>(params.size())))]);
  }
  auto sub_expr = [&] { return random_expr(rng, vars, params, depth - 1); };
  switch (pick(10)) {
    case 0: return add(sub_expr(), sub_expr());
    case 1: return sub(sub_expr(), sub_expr());
    case 2: return neg(sub_expr());
    case 3: return mul(sub_expr(), sub_expr());
    case 4: return div(sub_expr(), sub_expr());
    case 5: return pow(sub_expr(), 1 + pick(4));
    case 6: return exp(sub_expr());
    case 7: return log(sub_expr());
    case 8: return sqrt(sub_expr());
    default: return abs(sub_expr());
  }
}

Eigen::VectorXd random_cone_point(const ConeBlock& b, std::mt19937_64& rng) {
  const auto l = static_cast<Eigen::Index>(b.dim);
  Eigen::VectorXd v(l);
  switch (b.kind) {
    case ConeKind::Orthant:
      for (Eigen::Index i = 0; i < l; ++i) v[i] = Uniform(rng, 0.0, 3.0);
      break;
    case ConeKind::Soc: {
      for (Eigen::Index i = 1; i < l; ++i) v[i] = Uniform(rng, -3.0, 3.0);
      v[0] = v.tail(l - 1).norm() * (Uniform(rng, 0.0, 1.0) < 0.2 ? 1.0 : 1.0 + Uniform(rng, 0, 1));
      break;
    }
    case ConeKind::Exp: {
      if (Uniform(rng, 0.0, 1.0) < 0.1) {
        v << Uniform(rng, 0.0, 3.0), 0.0, -Uniform(rng, 0.0, 3.0);
        break;
      }
      const double x2 = Uniform(rng, 0.01, 3.0);
      const double x3 = x2 * Uniform(rng, -3.0, 3.0);
      const double slack = Uniform(rng, 0.0, 1.0) < 0.2 ? 0.0 : Uniform(rng, 0.0, 2.0);
      v << x2 * std::exp(x3 / x2) + slack, x2, x3;
      break;
    }
  }
  return v;
}

Eigen::VectorXd random_dual_cone_point(const ConeBlock& b, std::mt19937_64& rng) {
  if (b.kind != ConeKind::Exp) return random_cone_point(b, rng);
  Eigen::VectorXd s(3);
  if (Uniform(rng, 0.0, 1.0) < 0.1) {
    s << Uniform(rng, 0.0, 3.0), Uniform(rng, 0.0, 3.0), 0.0;
    return s;
  }
  const double s3 = -Uniform(rng, 0.01, 3.0);
  const double s2 = -s3 * Uniform(rng, -3.0, 3.0);
  const double slack = Uniform(rng, 0.0, 1.0) < 0.2 ? 0.0 : Uniform(rng, 0.0, 2.0);
  s << -s3 * std::exp(s2 / s3 - 1.0) + slack, s2, s3;
  return s;
}

RandomConic random_conic(std::mt19937_64& rng) {
  const int n = std::uniform_int_distribution<int>(1, 6)(rng);
  const int m = std::uniform_int_distribution<int>(0, n > 1 ? 2 : 0)(rng);
  const int blocks = std::uniform_int_distribution<int>(1, 3)(rng);
  RandomConic out;
  ConicProblem& cp = out.problem;
  for (int j = 0; j < n; ++j) cp.variables.push_back("x" + std::to_string(j));
  for (int k = 0; k < blocks; ++k) {
    switch (std::uniform_int_distribution<int>(0, 2)(rng)) {
      case 0:
        cp.cones.push_back(
            ConeBlock::orthant(static_cast<std::size_t>(std::uniform_int_distribution<int>(1, 3)(rng))));
        break;
      case 1:
        cp.cones.push_back(
            ConeBlock::soc(static_cast<std::size_t>(std::uniform_int_distribution<int>(1, 4)(rng))));
        break;
      default: cp.cones.push_back(ConeBlock::exp());
    }
  }
  const auto k = static_cast<Eigen::Index>(cp.cone_dim());
  Eigen::VectorXd x0(n);
  for (int j = 0; j < n; ++j) x0[j] = Uniform(rng, -2.0, 2.0);
  cp.A = Eigen::MatrixXd(m, n);
  for (int r = 0; r < m; ++r) {
    for (int j = 0; j < n; ++j) cp.A(r, j) = Uniform(rng, -2.0, 2.0);
  }
  cp.b = cp.A * x0;
  cp.G = Eigen::MatrixXd(k, n);
  for (Eigen::Index r = 0; r < k; ++r) {
    for (int j = 0; j < n; ++j) cp.G(r, j) = Uniform(rng, -2.0, 2.0);
  }
  Eigen::VectorXd s(k);
  Eigen::Index row = 0;
  for (const ConeBlock& blk : cp.cones) {
    s.segment(row, static_cast<Eigen::Index>(blk.dim)) = random_cone_point(blk, rng);
    row += static_cast<Eigen::Index>(blk.dim);
  }
  cp.h = cp.G * x0 - s;
  cp.c = Eigen::VectorXd::Zero(n);
  out.feasible_x = x0;
  return out;
}

double exp_dual_margin(const Eigen::Vector3d& z) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // Closure rays (1, 0, 0) and (0, 0, -1).
  if (z[0] < 0.0 || z[2] > 0.0) return -kInf;
  if (z[0] == 0.0) {
    if (z[2] < 0.0) return -kInf;  // v -> +inf along (e^v, 1, v)
    return z[1];
  }
  // f(v) = z1 e^v + z2 + z3 v is convex; ternary search on a wide bracket.
  auto f = [&](double v) { return z[0] * std::exp(v) + z[1] + z[2] * v; };
  double lo = -60.0;
  double hi = 60.0;
  for (int it = 0; it < 300; ++it) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (f(m1) <= f(m2)) {
      hi = m2;
    } else {
      lo = m1;
    }
  }
  return f(0.5 * (lo + hi));
}

DualCertificate random_certificate_setting_c(ConicProblem& cp, std::mt19937_64& rng) {
  DualCertificate cert;
  cert.y = Eigen::VectorXd(cp.A.rows());
  for (Eigen::Index i = 0; i < cert.y.size(); ++i) cert.y[i] = Uniform(rng, -2.0, 2.0);
  cert.z = Eigen::VectorXd(static_cast<Eigen::Index>(cp.cone_dim()));
  Eigen::Index row = 0;
  for (const ConeBlock& blk : cp.cones) {
    cert.z.segment(row, static_cast<Eigen::Index>(blk.dim)) = random_dual_cone_point(blk, rng);
    row += static_cast<Eigen::Index>(blk.dim);
  }
  cp.c = cp.A.transpose() * cert.y + cp.G.transpose() * cert.z;
  return cert;
}

}  // namespace dcpcanon::testing
