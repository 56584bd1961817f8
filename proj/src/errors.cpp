#include "romforge/errors.hpp"

namespace romforge {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidResolution: return "invalid-resolution";
        case ErrorCode::InvalidGeometry: return "invalid-geometry";
        case ErrorCode::IncompatibleFields: return "incompatible-fields";
        case ErrorCode::IncompatibleMesh: return "incompatible-mesh";
        case ErrorCode::UndefinedRelativeError: return "undefined-relative-error";
        case ErrorCode::InvalidStabilization: return "invalid-stabilization";
        case ErrorCode::FomDiverged: return "fom-diverged";
        case ErrorCode::SolverFailure: return "solver-failure";
        case ErrorCode::EmptySnapshots: return "empty-snapshots";
        case ErrorCode::DegenerateSnapshots: return "degenerate-snapshots";
        case ErrorCode::DegenerateSpectrum: return "degenerate-spectrum";
        case ErrorCode::InvalidBasis: return "invalid-basis";
        case ErrorCode::NewtonDiverged: return "newton-diverged";
        case ErrorCode::SingularJacobian: return "singular-jacobian";
        case ErrorCode::IllConditionedKernel: return "ill-conditioned-kernel";
        case ErrorCode::InvalidConfig: return "invalid-config";
        case ErrorCode::IncompleteBundle: return "incomplete-bundle";
        case ErrorCode::IoFailure: return "io-failure";
    }
    return "unknown-error";
}

}  // namespace romforge
