#ifndef DCPCANON_ORACLE_HPP
#define DCPCANON_ORACLE_HPP

// Brute-force lattice minimizer used as ground truth by the tests.
//
// The lattice has `resolution` points per axis, point i of axis [lo, hi]
// being lo + i * step with step = (hi - lo) / (resolution - 1). The reported minimizer is the
// lexicographically first lattice point (axes in problem variable order)
// attaining the least objective among points feasible at the tolerance;
// points where any expression leaves its atom's domain are skipped.
//
// With pruning enabled the lattice is searched by branch and bound over
// index boxes, discarding a box only when interval arithmetic proves every
// point in it infeasible or worse than the incumbent. The result is the
// same point the exhaustive scan returns.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dcpcanon/problem.hpp"

namespace dcpcanon {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct SearchBox {
  std::map<std::string, Range, std::less<>> ranges;
  std::size_t resolution = 101;

  /// Same range for every listed variable.
  static SearchBox uniform(const std::vector<std::string>& vars, Range r, std::size_t resolution);
};

struct Elimination {
  enum class Mode { None, Auto, Variable };
  Mode mode = Mode::None;
  std::string variable;  // Mode::Variable only
};

struct GridOptions {
  double tol = 1e-6;
  /// Tolerance for equality constraints; defaults to `tol`.
  std::optional<double> eq_tol;
  /// Solve one variable from an affine equality instead of searching it.
  /// Auto picks the first affine equality and its first variable (in
  /// problem order) with a nonzero coefficient.
  Elimination eliminate;
  unsigned threads = 1;
  bool prune = false;
  std::size_t leaf_points = 64;
};

struct GridResult {
  Assignment point;  // every problem variable
  double value = 0.0;
  std::optional<std::string> eliminated;
  std::size_t points_evaluated = 0;
};

/// Throws Error(Infeasible) when no lattice point is feasible, and
/// Error(InvalidProblem) for a box that misses a searched variable or has
/// resolution below 2.
GridResult grid_minimize(const Problem& p, const Assignment& params, const SearchBox& box,
                         const GridOptions& opts = {});

/// One lattice step's worth of objective change at `point`: the largest
/// |f(point + step_i e_i) - f(point)| over searched axes i (with the
/// eliminated variable recomputed).
double cell_objective_variation(const Problem& p, const Assignment& params, const SearchBox& box,
                                const GridResult& at, const GridOptions& opts = {});

struct SampleOptions {
  std::size_t count = 1000;
  std::uint64_t seed = 1;
  double tol = 1e-9;
  std::size_t max_draws = 10'000'000;
  Elimination eliminate{Elimination::Mode::Auto, {}};
};

/// Uniform rejection samples from the box (continuous, not the lattice) that
/// are feasible at `tol`, with affine equalities handled by elimination.
/// Returns fewer than `count` points if `max_draws` is exhausted.
std::vector<Assignment> sample_feasible(const Problem& p, const Assignment& params,
                                        const SearchBox& box, const SampleOptions& opts = {});

}  // namespace dcpcanon

#endif  // DCPCANON_ORACLE_HPP
