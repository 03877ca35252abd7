#ifndef SKLAB_ERRORS_HPP
#define SKLAB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sklab {

/// Broad failure class; the CLI maps these onto its exit codes.
enum class ErrorKind {
  kInput,         // malformed or inconsistent user input
  kSolver,        // numerical solver could not produce an answer
  kVerification,  // a verification precondition was violated
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define SKLAB_DEFINE_ERROR(Name, Kind)                               \
  class Name : public Error {                                        \
   public:                                                           \
    explicit Name(const std::string& what) : Error(Kind, what) {}    \
  };

SKLAB_DEFINE_ERROR(InvalidDomain, ErrorKind::kInput)
SKLAB_DEFINE_ERROR(InvalidArgument, ErrorKind::kInput)
SKLAB_DEFINE_ERROR(ParseError, ErrorKind::kInput)
SKLAB_DEFINE_ERROR(PointOutsideDomain, ErrorKind::kInput)
SKLAB_DEFINE_ERROR(BadInitialPoint, ErrorKind::kInput)
SKLAB_DEFINE_ERROR(GridMismatch, ErrorKind::kInput)
SKLAB_DEFINE_ERROR(NonCompletelyS, ErrorKind::kInput)
SKLAB_DEFINE_ERROR(ObliqueSignViolation, ErrorKind::kVerification)
SKLAB_DEFINE_ERROR(CenterInV, ErrorKind::kInput)
SKLAB_DEFINE_ERROR(CenterNotOnBoundary, ErrorKind::kInput)
SKLAB_DEFINE_ERROR(RadiusTooLarge, ErrorKind::kInput)
SKLAB_DEFINE_ERROR(InadmissibleTestFunction, ErrorKind::kVerification)
SKLAB_DEFINE_ERROR(LpNumericalFailure, ErrorKind::kSolver)

#undef SKLAB_DEFINE_ERROR

/// Lemke's method ended on a secondary ray: the step could not be
/// constrained. Typically seen near the V set.
class LcpRayTermination : public Error {
 public:
  LcpRayTermination(const std::string& what, long step)
      : Error(ErrorKind::kSolver, what), step_(step) {}

  /// Grid step at which the failure happened, or -1 for a single step.
  long step() const noexcept { return step_; }

 private:
  long step_;
};

}  // namespace sklab

#endif  // SKLAB_ERRORS_HPP
