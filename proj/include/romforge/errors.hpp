#pragma once

#include <stdexcept>
#include <string>

namespace romforge {

/// Failure categories carried by every romforge exception. The CLI maps
/// these onto process exit codes (see tools/romforge_main.cpp).
enum class ErrorCode {
    InvalidResolution,
    InvalidGeometry,
    IncompatibleFields,
    IncompatibleMesh,
    UndefinedRelativeError,
    InvalidStabilization,
    FomDiverged,
    SolverFailure,
    EmptySnapshots,
    DegenerateSnapshots,
    DegenerateSpectrum,
    InvalidBasis,
    NewtonDiverged,
    SingularJacobian,
    IllConditionedKernel,
    InvalidConfig,
    IncompleteBundle,
    IoFailure,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const { return code_; }

  private:
    ErrorCode code_;
};

}  // namespace romforge
