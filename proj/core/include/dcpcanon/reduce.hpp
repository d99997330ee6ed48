#ifndef DCPCANON_REDUCE_HPP
#define DCPCANON_REDUCE_HPP

// Reduction schemas. Each step maps a problem p to a problem q with more
// variables such that restricting any q-feasible point to p's variables is
// p-feasible with the same objective value; the recorded forward definition
// extends p-feasible points to q-feasible ones.
//
// New variables are placed in front of the variable list and new
// constraints in front of the constraint list, so a chain of steps reads
// innermost-first.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dcpcanon/conic.hpp"
#include "dcpcanon/dcp.hpp"
#include "dcpcanon/problem.hpp"

namespace dcpcanon {

enum class Schema {
  LinearizeAntimono,
  LinearizeMono,
  GraphExpandConcave,
  GraphExpandConvex,
  EliminateRedundant
};

std::string_view schema_name(Schema s);
/// Accepts the five schema names plus the shorthands `linearize` and
/// `graph_expand`, which pick the variant from the occurrence's polarity.
std::optional<Schema> schema_from_name(std::string_view name);

struct TraceStep {
  Schema schema = Schema::LinearizeAntimono;
  std::optional<OccurrencePath> at;     // the selected occurrence (pre-step)
  std::vector<OccurrencePath> targets;  // every replaced occurrence (pre-step)
  std::string fresh;                    // empty for eliminate_redundant
  std::optional<Expr> definition;       // fresh := definition
  std::vector<std::size_t> added;       // indices in the post-step problem
  std::vector<std::size_t> removed;     // indices in the pre-step problem
  std::vector<std::size_t> implied_by;  // pre-step indices proving the removals
  std::vector<Constraint> added_constraints;

  friend bool operator==(const TraceStep&, const TraceStep&) = default;
};

struct StepResult {
  Problem problem;
  TraceStep step;
};

struct StepOptions {
  /// Name for the fresh variable; defaults to the smallest unused t<k>.
  std::optional<std::string> fresh_name;
  /// Parameter values used when re-verifying implications numerically;
  /// unbound parameters are sampled according to their declared sign.
  Assignment params;
  std::size_t samples = 200;
  std::uint64_t seed = 0x5eed;
};

/// Replaces the subterm at `path` (and every structurally identical
/// occurrence with the same polarity) by a fresh t, adding `g <= t` for
/// antimonotone occurrences and `t <= g` for monotone ones.
StepResult linearize(const Problem& p, const OccurrencePath& path, const StepOptions& opts = {});

/// Like linearize, but adds the atom's graph implementation d(t, args)
/// instead of the defining inequality.
StepResult graph_expand(const Problem& p, const OccurrencePath& path,
                        const StepOptions& opts = {});

/// Removes the constraints at `indices`, each of which must follow from
/// the remaining ones by one of the implication rules.
StepResult eliminate_redundant(const Problem& p, std::vector<std::size_t> indices,
                               const StepOptions& opts = {});

/// Dispatches on `schema`; `path` is an occurrence path, or a
/// comma-separated index list for eliminate_redundant.
StepResult apply_step(const Problem& p, Schema schema, std::string_view path,
                      const StepOptions& opts = {});

struct Implication {
  std::vector<std::size_t> premises;
  std::string rule;
};

/// Syntactic implication search over the constraints of `cs` not marked
/// excluded. Rules: identical constraint; `0 < e` gives `0 <= e`;
/// `u^2 <= e` gives `0 <= e`; `exp(u) <= e` gives `0 <= e` and `0 < e`;
/// `e1 <= e2` with `e2 <= e3` gives `e1 <= e3`.
std::optional<Implication> find_implication(const std::vector<Constraint>& cs,
                                            const Constraint& target,
                                            const std::vector<bool>& excluded);

/// Samples points and reports whether any satisfies all premises but not
/// the conclusion.
bool implication_survives_sampling(const Problem& p, const std::vector<Constraint>& premises,
                                   const Constraint& conclusion, const StepOptions& opts);

struct ReductionTrace {
  Problem original;
  std::vector<TraceStep> steps;
  Problem final_problem;

  /// original, then the problem after each step.
  std::vector<Problem> stages() const;
};

/// Re-applies the steps' schemas to `original` and checks each produces
/// the recorded step. Throws Error(TraceMismatch).
ReductionTrace replay(const Problem& original, const std::vector<TraceStep>& steps);

/// Restriction of a final-problem point to the original variables.
Assignment backmap(const ReductionTrace& trace, const Assignment& point);
/// Extends an original point by evaluating each forward definition in
/// order; `params` supplies parameter values.
Assignment forward_map(const ReductionTrace& trace, const Assignment& point,
                       const Assignment& params);

/// Text form: `TRACE 1`, one `STEP` line per step, `END`.
std::string write_trace(const ReductionTrace& trace);
/// Parses a trace for `original` and replays it. Throws
/// Error(MalformedFile) or Error(TraceMismatch).
ReductionTrace read_trace(std::string_view text, const Problem& original);

struct CanonResult {
  ConicProblem conic;
  ReductionTrace trace;
};

/// Automatic driver: expands every non-cone-representable atom occurrence,
/// removes redundant constraints, and emits the conic form with the
/// original variables first followed by fresh variables in introduction
/// order.
CanonResult canonize(const Problem& p, const Assignment& params);

/// Whether `c` already has one of the shapes emit() accepts (ignoring strictness).
bool is_cone_representable(const Constraint& c, const SignContext& signs);

}  // namespace dcpcanon

#endif  // DCPCANON_REDUCE_HPP
