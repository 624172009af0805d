#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace issp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class ErrorCode {
  kInvalidArgument,
  kDimensionMismatch,
  kUnboundedSupport,
  kUnstableLinearization,
  kSolverFailure,
  kDegenerateCertificate,
  kPrecondition,
  kBothZero,
  kDriftNotPositive,
  kEmptyRegion,
  kValidation,
};

const char* error_code_name(ErrorCode code);

// Every failure raised by the library carries one of the codes above so that
// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace issp
