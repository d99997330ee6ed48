#include "dcpcanon/conic.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "dcpcanon/atoms.hpp"
#include "dcpcanon/dsl.hpp"
#include "dcpcanon/error.hpp"

namespace dcpcanon {

std::string_view cone_kind_name(ConeKind k) {
  switch (k) {
    case ConeKind::Orthant: return "ORTHANT";
    case ConeKind::Soc: return "SOC";
    case ConeKind::Exp: return "EXP";
  }
  return "?";
}

std::string ConeBlock::to_string() const {
  if (kind == ConeKind::Exp) return "EXP";
  return std::string(cone_kind_name(kind)) + " " + std::to_string(dim);
}

std::size_t ConicProblem::cone_dim() const {
  std::size_t k = 0;
  for (const ConeBlock& b : cones) k += b.dim;
  return k;
}

void ConicProblem::validate() const {
  const auto n = static_cast<Eigen::Index>(variables.size());
  auto fail = [](const std::string& what) { throw Error(ErrorKind::DimensionMismatch, what); };
  if (c.size() != n) fail("objective has " + std::to_string(c.size()) + " entries, expected n");
  if (A.cols() != n && A.rows() != 0) fail("A column count differs from n");
  if (A.rows() != b.size()) fail("A and b row counts differ");
  if (G.cols() != n && G.rows() != 0) fail("G column count differs from n");
  if (G.rows() != h.size()) fail("G and h row counts differ");
  if (static_cast<std::size_t>(G.rows()) != cone_dim()) fail("cone dimensions do not sum to rows of G");
  for (const ConeBlock& blk : cones) {
    if (blk.dim < 1) fail("cone block of dimension 0");
    if (blk.kind == ConeKind::Exp && blk.dim != 3) fail("EXP block must have dimension 3");
  }
}

namespace {

bool SameMatrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return a.size() == 0 || a == b;
}

bool SameVector(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) return false;
  return a.size() == 0 || a == b;
}

}  // namespace

bool operator==(const ConicProblem& x, const ConicProblem& y) {
  return x.variables == y.variables && SameVector(x.c, y.c) && x.offset == y.offset &&
         SameMatrix(x.A, y.A) && SameVector(x.b, y.b) && SameMatrix(x.G, y.G) &&
         SameVector(x.h, y.h) && x.cones == y.cones;
}

std::optional<AffineForm> affine_form(const Expr& e, const Assignment& params,
                                      const std::vector<std::string>& vars) {
  const auto n = static_cast<Eigen::Index>(vars.size());
  AffineForm out{Eigen::VectorXd::Zero(n), 0.0};
  switch (e.kind()) {
    case Expr::Kind::Constant:
      out.constant = e.value();
      return out;
    case Expr::Kind::Parameter: {
      auto it = params.find(e.name());
      if (it == params.end()) throw Error(ErrorKind::UnboundParameter, "unbound parameter " + e.name());
      out.constant = it->second;
      return out;
    }
    case Expr::Kind::Variable: {
      auto it = std::find(vars.begin(), vars.end(), e.name());
      if (it == vars.end()) throw Error(ErrorKind::MissingVariable, e.name());
      out.coef[it - vars.begin()] = 1.0;
      return out;
    }
    case Expr::Kind::Apply: break;
  }
  std::vector<AffineForm> args;
  for (const Expr& a : e.args()) {
    auto f = affine_form(a, params, vars);
    if (!f) return std::nullopt;
    args.push_back(std::move(*f));
  }
  auto is_const = [](const AffineForm& f) { return f.coef.isZero(0.0); };
  switch (e.op()) {
    case Op::Add:
      out.coef = args[0].coef + args[1].coef;
      out.constant = args[0].constant + args[1].constant;
      return out;
    case Op::Sub:
      out.coef = args[0].coef - args[1].coef;
      out.constant = args[0].constant - args[1].constant;
      return out;
    case Op::Neg:
      out.coef = -args[0].coef;
      out.constant = -args[0].constant;
      return out;
    case Op::Mul:
      if (is_const(args[0])) {
        out.coef = args[0].constant * args[1].coef;
        out.constant = args[0].constant * args[1].constant;
        return out;
      }
      if (is_const(args[1])) {
        out.coef = args[1].constant * args[0].coef;
        out.constant = args[1].constant * args[0].constant;
        return out;
      }
      return std::nullopt;
    case Op::Div:
      if (!is_const(args[1])) return std::nullopt;
      if (args[1].constant == 0.0) throw DomainError("div", 0.0);
      out.coef = args[0].coef / args[1].constant;
      out.constant = args[0].constant / args[1].constant;
      return out;
    default: {
      if (e.is_apply(Op::Pow) && e.exponent() == 1) return args[0];
      if (!is_const(args[0])) return std::nullopt;
      const double a = args[0].constant;
      out.constant = apply_op(e.op(), e.exponent(), std::span<const double>(&a, 1));
      return out;
    }
  }
}

namespace {

struct Row {
  Eigen::VectorXd coef;
  double constant;
};

Row Scaled(const AffineForm& f, double scale, double shift) {
  return {f.coef * scale, f.constant * scale + shift};
}

}  // namespace

ConicProblem emit(const Problem& p, const Assignment& params,
                  const std::optional<std::vector<std::string>>& order) {
  check_params_bound(p, params);
  std::vector<std::string> vars = order ? *order : p.variables;
  {
    std::vector<std::string> a = vars;
    std::vector<std::string> b = p.variables;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b) {
      throw Error(ErrorKind::DimensionMismatch,
                  "variable order is not a permutation of the problem variables");
    }
  }
  const auto n = static_cast<Eigen::Index>(vars.size());
  ConicProblem cp;
  cp.variables = vars;
  auto obj = affine_form(p.objective, params, vars);
  if (!obj) throw Error(ErrorKind::UnrecognizedShape, "objective is not affine");
  cp.c = obj->coef;
  cp.offset = obj->constant;

  std::vector<Row> eq_rows;
  std::vector<Row> cone_rows;
  for (std::size_t i = 0; i < p.constraints.size(); ++i) {
    const Constraint c = oriented(p.constraints[i]);
    const std::string where = "constraint #" + std::to_string(i) + " (" +
                              print(p.constraints[i]) + ")";
    if (is_strict(c.cmp)) throw Error(ErrorKind::StrictComparatorRemains, where);
    auto lf = affine_form(c.lhs, params, vars);
    auto rf = affine_form(c.rhs, params, vars);
    if (c.cmp == Comparator::Eq) {
      if (!lf || !rf) throw Error(ErrorKind::UnrecognizedShape, where);
      eq_rows.push_back({lf->coef - rf->coef, lf->constant - rf->constant});
      continue;
    }
    if (!rf) throw Error(ErrorKind::UnrecognizedShape, where);
    if (lf) {
      cone_rows.push_back({rf->coef - lf->coef, rf->constant - lf->constant});
      cp.cones.push_back(ConeBlock::orthant(1));
      continue;
    }
    if (c.lhs.is_apply(Op::Pow) && c.lhs.exponent() == 2) {
      auto u = affine_form(c.lhs.args()[0], params, vars);
      if (!u) throw Error(ErrorKind::UnrecognizedShape, where);
      // t^2 <= e  <=>  (e + 1) / 2 >= ||((e - 1) / 2, t)||
      cone_rows.push_back(Scaled(*rf, 0.5, 0.5));
      cone_rows.push_back(Scaled(*rf, 0.5, -0.5));
      cone_rows.push_back(Scaled(*u, 1.0, 0.0));
      cp.cones.push_back(ConeBlock::soc(3));
      continue;
    }
    if (c.lhs.is_apply(Op::Exp)) {
      auto u = affine_form(c.lhs.args()[0], params, vars);
      if (!u) throw Error(ErrorKind::UnrecognizedShape, where);
      cone_rows.push_back(Scaled(*rf, 1.0, 0.0));
      cone_rows.push_back({Eigen::VectorXd::Zero(n), 1.0});
      cone_rows.push_back(Scaled(*u, 1.0, 0.0));
      cp.cones.push_back(ConeBlock::exp());
      continue;
    }
    throw Error(ErrorKind::UnrecognizedShape, where);
  }

  cp.A.resize(static_cast<Eigen::Index>(eq_rows.size()), n);
  cp.b.resize(static_cast<Eigen::Index>(eq_rows.size()));
  for (std::size_t r = 0; r < eq_rows.size(); ++r) {
    cp.A.row(static_cast<Eigen::Index>(r)) = eq_rows[r].coef.transpose();
    cp.b[static_cast<Eigen::Index>(r)] = 0.0 - eq_rows[r].constant;
  }
  cp.G.resize(static_cast<Eigen::Index>(cone_rows.size()), n);
  cp.h.resize(static_cast<Eigen::Index>(cone_rows.size()));
  for (std::size_t r = 0; r < cone_rows.size(); ++r) {
    cp.G.row(static_cast<Eigen::Index>(r)) = cone_rows[r].coef.transpose();
    cp.h[static_cast<Eigen::Index>(r)] = 0.0 - cone_rows[r].constant;
  }
  cp.validate();
  return cp;
}

namespace {

void CheckDim(const ConeBlock& block, std::size_t got) {
  if (got != block.dim) {
    throw Error(ErrorKind::DimensionMismatch, block.to_string() + " block given a vector of size " +
                                                  std::to_string(got));
  }
}

double TailNorm(std::span<const double> v) {
  double s = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i) s += v[i] * v[i];
  return std::sqrt(s);
}

}  // namespace

bool cone_member(const ConeBlock& block, std::span<const double> v, double tol) {
  CheckDim(block, v.size());
  switch (block.kind) {
    case ConeKind::Orthant:
      return std::all_of(v.begin(), v.end(), [tol](double x) { return x >= -tol; });
    case ConeKind::Soc: return v[0] + tol >= TailNorm(v);
    case ConeKind::Exp: {
      if (v[1] > 0.0 && v[0] + tol >= v[1] * std::exp(v[2] / v[1])) return true;
      return std::fabs(v[1]) <= tol && v[0] >= -tol && v[2] <= tol;
    }
  }
  return false;
}

bool dual_cone_member(const ConeBlock& block, std::span<const double> z, double tol) {
  CheckDim(block, z.size());
  if (block.kind != ConeKind::Exp) return cone_member(block, z, tol);
  // K_exp* = {s : s1 >= -s3 exp(s2 / s3 - 1), s3 < 0} u {s1 >= 0, s2 >= 0, s3 = 0}
  if (z[2] < -tol) return z[0] + tol >= -z[2] * std::exp(z[1] / z[2] - 1.0);
  if (std::fabs(z[2]) <= tol) return z[0] >= -tol && z[1] >= -tol;
  return false;
}

PrimalVerdict check_primal(const ConicProblem& cp, const Eigen::VectorXd& x, double tol) {
  if (static_cast<std::size_t>(x.size()) != cp.num_vars()) {
    throw Error(ErrorKind::DimensionMismatch, "primal vector has " + std::to_string(x.size()) +
                                                  " entries, problem has " +
                                                  std::to_string(cp.num_vars()) + " variables");
  }
  PrimalVerdict v;
  v.objective = cp.c.dot(x) + cp.offset;
  if (cp.A.rows() > 0) {
    const Eigen::VectorXd r = cp.A * x - cp.b;
    Eigen::Index worst = 0;
    v.eq_residual = r.cwiseAbs().maxCoeff(&worst);
    if (!(v.eq_residual <= tol)) {
      v.failed_row = static_cast<std::size_t>(worst);
      v.reason = "equality row " + std::to_string(worst) + " residual " +
                 format_number(v.eq_residual);
      return v;
    }
  }
  const Eigen::VectorXd s = cp.G * x - cp.h;
  std::size_t offset = 0;
  for (std::size_t k = 0; k < cp.cones.size(); ++k) {
    const ConeBlock& blk = cp.cones[k];
    std::span<const double> part(s.data() + offset, blk.dim);
    if (!cone_member(blk, part, tol)) {
      v.failed_block = k;
      v.reason = "cone block " + std::to_string(k + 1) + " (" + blk.to_string() + ")";
      return v;
    }
    offset += blk.dim;
  }
  v.feasible = true;
  return v;
}

DualVerdict check_dual_bound(const ConicProblem& cp, const DualCertificate& cert, double tol) {
  DualVerdict v;
  if (static_cast<std::size_t>(cert.y.size()) != cp.num_eq() ||
      static_cast<std::size_t>(cert.z.size()) != cp.cone_dim()) {
    v.reason = "dimension: expected " + std::to_string(cp.num_eq()) + " equality and " +
               std::to_string(cp.cone_dim()) + " cone multipliers";
    return v;
  }
  Eigen::VectorXd grad = -cp.c;
  if (cp.A.rows() > 0) grad += cp.A.transpose() * cert.y;
  if (cp.G.rows() > 0) grad += cp.G.transpose() * cert.z;
  v.stationarity_residual = grad.size() ? grad.cwiseAbs().maxCoeff() : 0.0;
  if (!(v.stationarity_residual <= tol)) {
    v.reason = "stationarity residual " + format_number(v.stationarity_residual);
    return v;
  }
  std::size_t offset = 0;
  for (std::size_t k = 0; k < cp.cones.size(); ++k) {
    const ConeBlock& blk = cp.cones[k];
    std::span<const double> part(cert.z.data() + offset, blk.dim);
    if (!dual_cone_member(blk, part, tol)) {
      v.failed_block = k;
      v.reason = "dual cone block " + std::to_string(k + 1) + " (" + blk.to_string() + ")";
      return v;
    }
    offset += blk.dim;
  }
  v.bound = cp.offset + (cp.b.size() ? cp.b.dot(cert.y) : 0.0) +
            (cp.h.size() ? cp.h.dot(cert.z) : 0.0);
  v.accepted = true;
  return v;
}

namespace {

void AppendNumbers(std::string& out, const auto& values) {
  bool first = true;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (!first) out += ' ';
    out += format_number(values[i]);
    first = false;
  }
}

void AppendRows(std::string& out, const Eigen::MatrixXd& M, const Eigen::VectorXd& rhs,
                Eigen::Index begin, Eigen::Index count) {
  for (Eigen::Index r = begin; r < begin + count; ++r) {
    Eigen::VectorXd row(M.cols() + 1);
    row << M.row(r).transpose(), rhs[r];
    AppendNumbers(out, row);
    out += '\n';
  }
}

// Line-oriented reader shared by the conic and solution formats. Blank
// lines and `#` comments are skipped.
class LineReader {
 public:
  explicit LineReader(std::string_view text) {
    std::size_t start = 0;
    std::size_t lineno = 1;
    while (start <= text.size()) {
      std::size_t nl = text.find('\n', start);
      if (nl == std::string_view::npos) nl = text.size();
      std::string_view line = text.substr(start, nl - start);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      const std::size_t first = line.find_first_not_of(" \t");
      if (first != std::string_view::npos && line[first] != '#') {
        lines_.push_back({lineno, std::string(line.substr(first))});
      }
      ++lineno;
      start = nl + 1;
    }
    last_line_ = lineno;
  }

  bool done() const { return pos_ >= lines_.size(); }

  [[noreturn]] void fail(const std::string& msg) const {
    const std::size_t at = pos_ < lines_.size() ? lines_[pos_].first : last_line_;
    throw Error(ErrorKind::MalformedFile, "line " + std::to_string(at) + ": " + msg);
  }

  std::vector<std::string> tokens(const std::string& expecting) {
    if (done()) fail("unexpected end of file, expected " + expecting);
    std::istringstream is(lines_[pos_].second);
    std::vector<std::string> out;
    for (std::string t; is >> t;) out.push_back(t);
    return out;
  }

  std::vector<std::string> take(const std::string& expecting) {
    auto t = tokens(expecting);
    ++pos_;
    return t;
  }

  void back() { --pos_; }

  double number(const std::string& s) const {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) fail("malformed number '" + s + "'");
    return v;
  }

  std::size_t count(const std::string& s) const {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) fail("malformed count '" + s + "'");
    return v;
  }

  Eigen::VectorXd numbers(const std::vector<std::string>& toks, std::size_t from) const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(toks.size() - from));
    for (std::size_t i = from; i < toks.size(); ++i) {
      v[static_cast<Eigen::Index>(i - from)] = number(toks[i]);
    }
    return v;
  }

  void expect_header(const std::string& magic) {
    auto t = take(magic + " 1");
    if (t.size() != 2 || t[0] != magic) {
      back();
      fail("expected '" + magic + " 1'");
    }
    if (t[1] != "1") {
      back();
      fail("unsupported version " + t[1]);
    }
  }

  // Reads `rows` lines of exactly `width` numbers into M (all but last) and
  // rhs (last column).
  void rows(std::size_t rows, std::size_t width, Eigen::MatrixXd& M, Eigen::VectorXd& rhs,
            Eigen::Index at, const std::string& section) {
    for (std::size_t r = 0; r < rows; ++r) {
      auto t = take(section + " row");
      if (t.size() != width) {
        back();
        fail(section + " row has " + std::to_string(t.size()) + " numbers, expected " +
             std::to_string(width));
      }
      Eigen::VectorXd v = numbers(t, 0);
      M.row(at + static_cast<Eigen::Index>(r)) = v.head(v.size() - 1).transpose();
      rhs[at + static_cast<Eigen::Index>(r)] = v[v.size() - 1];
    }
  }

 private:
  std::vector<std::pair<std::size_t, std::string>> lines_;
  std::size_t pos_ = 0;
  std::size_t last_line_ = 1;
};

}  // namespace

std::string write_conic(const ConicProblem& cp) {
  cp.validate();
  std::string out = "CONICFORM 1\nVARS " + std::to_string(cp.num_vars()) + "\n";
  for (std::size_t i = 0; i < cp.variables.size(); ++i) {
    if (i) out += ' ';
    out += cp.variables[i];
  }
  out += "\nOBJ ";
  AppendNumbers(out, cp.c);
  out += '\n';
  if (cp.offset != 0.0) out += "OFFSET " + format_number(cp.offset) + "\n";
  out += "EQ " + std::to_string(cp.num_eq()) + "\n";
  AppendRows(out, cp.A, cp.b, 0, cp.A.rows());
  Eigen::Index row = 0;
  for (const ConeBlock& blk : cp.cones) {
    out += "CONE " + blk.to_string() + "\n";
    AppendRows(out, cp.G, cp.h, row, static_cast<Eigen::Index>(blk.dim));
    row += static_cast<Eigen::Index>(blk.dim);
  }
  out += "END\n";
  return out;
}

ConicProblem read_conic(std::string_view text) {
  LineReader in(text);
  ConicProblem cp;
  in.expect_header("CONICFORM");
  auto t = in.take("VARS n");
  if (t.size() != 2 || t[0] != "VARS") {
    in.back();
    in.fail("expected 'VARS n'");
  }
  const std::size_t n = in.count(t[1]);
  cp.variables = in.take("variable names");
  if (cp.variables.size() != n) {
    in.back();
    in.fail("expected " + std::to_string(n) + " variable names");
  }
  t = in.take("OBJ");
  if (t.empty() || t[0] != "OBJ" || t.size() != n + 1) {
    in.back();
    in.fail("expected 'OBJ' followed by " + std::to_string(n) + " numbers");
  }
  cp.c = in.numbers(t, 1);
  t = in.take("EQ m");
  if (t.size() == 2 && t[0] == "OFFSET") {
    cp.offset = in.number(t[1]);
    t = in.take("EQ m");
  }
  if (t.size() != 2 || t[0] != "EQ") {
    in.back();
    in.fail("expected 'EQ m'");
  }
  const std::size_t m = in.count(t[1]);
  cp.A.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  cp.b.resize(static_cast<Eigen::Index>(m));
  in.rows(m, n + 1, cp.A, cp.b, 0, "EQ");

  std::vector<Eigen::VectorXd> g_rows;
  std::vector<double> h_rows;
  while (true) {
    t = in.take("CONE or END");
    if (t.size() == 1 && t[0] == "END") break;
    if (t.empty() || t[0] != "CONE" || t.size() < 2) {
      in.back();
      in.fail("expected 'CONE <kind>' or 'END'");
    }
    ConeBlock blk;
    if (t[1] == "EXP" && t.size() == 2) {
      blk = ConeBlock::exp();
    } else if ((t[1] == "ORTHANT" || t[1] == "SOC") && t.size() == 3) {
      blk = {t[1] == "SOC" ? ConeKind::Soc : ConeKind::Orthant, in.count(t[2])};
      if (blk.dim == 0) {
        in.back();
        in.fail("cone dimension must be positive");
      }
    } else {
      in.back();
      in.fail("unknown cone '" + t[1] + "'");
    }
    Eigen::MatrixXd block(static_cast<Eigen::Index>(blk.dim), static_cast<Eigen::Index>(n));
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(blk.dim));
    in.rows(blk.dim, n + 1, block, rhs, 0, "CONE " + blk.to_string());
    for (Eigen::Index r = 0; r < block.rows(); ++r) {
      g_rows.push_back(block.row(r).transpose());
      h_rows.push_back(rhs[r]);
    }
    cp.cones.push_back(blk);
  }
  if (!in.done()) in.fail("content after END");
  cp.G.resize(static_cast<Eigen::Index>(g_rows.size()), static_cast<Eigen::Index>(n));
  cp.h.resize(static_cast<Eigen::Index>(h_rows.size()));
  for (std::size_t r = 0; r < g_rows.size(); ++r) {
    cp.G.row(static_cast<Eigen::Index>(r)) = g_rows[r].transpose();
    cp.h[static_cast<Eigen::Index>(r)] = h_rows[r];
  }
  cp.validate();
  return cp;
}

std::string write_solution(const Solution& s) {
  std::string out = "SOLUTION 1\nPRIMAL";
  if (s.primal.size()) out += ' ';
  AppendNumbers(out, s.primal);
  out += '\n';
  if (s.dual) {
    out += "DUAL_EQ";
    if (s.dual->y.size()) out += ' ';
    AppendNumbers(out, s.dual->y);
    out += "\nDUAL_CONE";
    if (s.dual->z.size()) out += ' ';
    AppendNumbers(out, s.dual->z);
    out += '\n';
  }
  out += "END\n";
  return out;
}

Solution read_solution(std::string_view text) {
  LineReader in(text);
  Solution s;
  in.expect_header("SOLUTION");
  auto t = in.take("PRIMAL");
  if (t.empty() || t[0] != "PRIMAL") {
    in.back();
    in.fail("expected 'PRIMAL'");
  }
  s.primal = in.numbers(t, 1);
  bool have_eq = false;
  bool have_cone = false;
  DualCertificate cert;
  while (true) {
    t = in.take("DUAL_EQ, DUAL_CONE or END");
    if (t.size() == 1 && t[0] == "END") break;
    if (!t.empty() && t[0] == "DUAL_EQ" && !have_eq) {
      cert.y = in.numbers(t, 1);
      have_eq = true;
    } else if (!t.empty() && t[0] == "DUAL_CONE" && !have_cone) {
      cert.z = in.numbers(t, 1);
      have_cone = true;
    } else {
      in.back();
      in.fail("unexpected '" + (t.empty() ? std::string() : t[0]) + "'");
    }
  }
  if (!in.done()) in.fail("content after END");
  if (have_eq || have_cone) s.dual = std::move(cert);
  return s;
}

namespace {

Expr LinearExpr(const Eigen::VectorXd& coef, double constant,
                const std::vector<std::string>& vars) {
  std::optional<Expr> sum;
  for (Eigen::Index j = 0; j < coef.size(); ++j) {
    if (coef[j] == 0.0) continue;
    Expr term = Expr::variable(vars[static_cast<std::size_t>(j)]);
    if (coef[j] != 1.0) term = mul(Expr::constant(coef[j]), term);
    sum = sum ? add(*sum, term) : term;
  }
  if (!sum) return Expr::constant(constant);
  if (constant != 0.0) return add(*sum, Expr::constant(constant));
  return *sum;
}

}  // namespace

Problem to_problem(const ConicProblem& cp) {
  cp.validate();
  Problem p;
  p.variables = cp.variables;
  p.objective = LinearExpr(cp.c, cp.offset, cp.variables);
  for (Eigen::Index r = 0; r < cp.A.rows(); ++r) {
    p.constraints.push_back({LinearExpr(cp.A.row(r).transpose(), 0.0, cp.variables),
                             Comparator::Eq, Expr::constant(cp.b[r])});
  }
  Eigen::Index row = 0;
  auto entry = [&](Eigen::Index r) {
    return LinearExpr(cp.G.row(r).transpose(), -cp.h[r], cp.variables);
  };
  const Expr zero = Expr::constant(0.0);
  for (const ConeBlock& blk : cp.cones) {
    switch (blk.kind) {
      case ConeKind::Orthant:
        for (std::size_t i = 0; i < blk.dim; ++i) {
          p.constraints.push_back({zero, Comparator::Le, entry(row + static_cast<Eigen::Index>(i))});
        }
        break;
      case ConeKind::Soc: {
        if (blk.dim == 1) {
          p.constraints.push_back({zero, Comparator::Le, entry(row)});
          break;
        }
        Expr sumsq = pow(entry(row + 1), 2);
        for (std::size_t i = 2; i < blk.dim; ++i) {
          sumsq = add(sumsq, pow(entry(row + static_cast<Eigen::Index>(i)), 2));
        }
        p.constraints.push_back({sqrt(sumsq), Comparator::Le, entry(row)});
        break;
      }
      case ConeKind::Exp: {
        const bool scale_constant = cp.G.row(row + 1).isZero(0.0);
        const double k = -cp.h[row + 1];
        if (scale_constant && k == 1.0) {
          p.constraints.push_back({exp(entry(row + 2)), Comparator::Le, entry(row)});
        } else if (scale_constant && k > 0.0) {
          const Expr ke = Expr::constant(k);
          p.constraints.push_back(
              {mul(ke, exp(div(entry(row + 2), ke))), Comparator::Le, entry(row)});
        } else if (scale_constant && k == 0.0) {
          p.constraints.push_back({zero, Comparator::Le, entry(row)});
          p.constraints.push_back({entry(row + 2), Comparator::Le, zero});
        } else if (scale_constant) {
          p.constraints.push_back({Expr::constant(1.0), Comparator::Le, zero});
        } else {
          // Only the v2 > 0 branch is representable point-wise here.
          const Expr v2 = entry(row + 1);
          p.constraints.push_back({zero, Comparator::Lt, v2});
          p.constraints.push_back(
              {mul(v2, exp(div(entry(row + 2), v2))), Comparator::Le, entry(row)});
        }
        break;
      }
    }
    row += static_cast<Eigen::Index>(blk.dim);
  }
  return p;
}

}  // namespace dcpcanon
