#ifndef DCPCANON_ERROR_HPP
#define DCPCANON_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace dcpcanon {

enum class ErrorKind {
  DomainError,
  UnboundName,
  InvalidProblem,
  ParseError,
  InvalidPath,
  ObjectiveTarget,
  PolarityUnknown,
  PolarityMismatch,
  AffineTarget,
  NoGraphImpl,
  MissingDomainFact,
  NotProvablyRedundant,
  NotConeRepresentable,
  StrictComparatorRemains,
  UnrecognizedShape,
  UnboundParameter,
  SignViolation,
  DimensionMismatch,
  MalformedFile,
  TraceMismatch,
  MissingVariable,
  Infeasible,
};

std::string_view to_string(ErrorKind kind);

// All library failures are reported through this type; kind() is the
// machine-readable category, what() the human-readable detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail);

  ErrorKind kind() const noexcept { return kind_; }
  /// what() without the leading "Kind: ".
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

// An atom was applied outside its domain (log of a nonpositive value,
// sqrt of a negative value, division by zero).
class DomainError : public Error {
 public:
  DomainError(std::string atom, double argument);

  const std::string& atom() const noexcept { return atom_; }
  double argument() const noexcept { return argument_; }

 private:
  std::string atom_;
  double argument_;
};

}  // namespace dcpcanon

#endif  // DCPCANON_ERROR_HPP
