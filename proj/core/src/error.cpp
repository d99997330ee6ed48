#include "dcpcanon/error.hpp"

#include <sstream>

namespace dcpcanon {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::UnboundName: return "UnboundName";
    case ErrorKind::InvalidProblem: return "InvalidProblem";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::InvalidPath: return "InvalidPath";
    case ErrorKind::ObjectiveTarget: return "ObjectiveTarget";
    case ErrorKind::PolarityUnknown: return "PolarityUnknown";
    case ErrorKind::PolarityMismatch: return "PolarityMismatch";
    case ErrorKind::AffineTarget: return "AffineTarget";
    case ErrorKind::NoGraphImpl: return "NoGraphImpl";
    case ErrorKind::MissingDomainFact: return "MissingDomainFact";
    case ErrorKind::NotProvablyRedundant: return "NotProvablyRedundant";
    case ErrorKind::NotConeRepresentable: return "NotConeRepresentable";
    case ErrorKind::StrictComparatorRemains: return "StrictComparatorRemains";
    case ErrorKind::UnrecognizedShape: return "UnrecognizedShape";
    case ErrorKind::UnboundParameter: return "UnboundParameter";
    case ErrorKind::SignViolation: return "SignViolation";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::MalformedFile: return "MalformedFile";
    case ErrorKind::TraceMismatch: return "TraceMismatch";
    case ErrorKind::MissingVariable: return "MissingVariable";
    case ErrorKind::Infeasible: return "Infeasible";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& detail)
    : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind), detail_(detail) {}

namespace {
std::string DomainMessage(const std::string& atom, double argument) {
  std::ostringstream os;
  os << atom << " applied to " << argument;
  return os.str();
}
}  // namespace

DomainError::DomainError(std::string atom, double argument)
    : Error(ErrorKind::DomainError, DomainMessage(atom, argument)),
      atom_(std::move(atom)),
      argument_(argument) {}

}  // namespace dcpcanon
