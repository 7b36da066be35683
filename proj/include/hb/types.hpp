#pragma once

#include <Eigen/Dense>
#include <limits>
#include <stdexcept>
#include <string>

namespace hb {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Error categories surfaced to callers (the CLI maps them to exit codes).
enum class ErrorCode {
  Parse,
  Precondition,
  UndefinedAtPoint,
  NonpositiveDerivative,
  EmptySet,
  DimensionTooLarge,
  NoSlater,
  NoCertificate,
  CenterNotInSet,
  CenterNotOptimal,
  ActiveSetTooLarge,
  DisjointnessViolation,
  SolverFailure,
  Internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

/// pow with the 0^0 = 1 convention hard-wired; every power evaluation in the
/// library goes through this helper so the convention is applied uniformly.
inline double pow0(double base, double expo) {
  if (expo == 0.0) return 1.0;
  return std::pow(base, expo);
}

inline Vec vec1(double a) {
  Vec v(1);
  v << a;
  return v;
}

inline Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

}  // namespace hb
