#pragma once

#include <stdexcept>
#include <string>

namespace normsolve {

/// Failure categories surfaced to callers and mapped to CLI exit codes.
enum class ErrorKind {
    InvalidArgument,  ///< precondition violated by the caller
    GridMismatch,     ///< fields living on different grids were combined
    UnderResolved,    ///< a feature is too small for the grid spacing
    NotConverged,     ///< iteration cap reached
    Singular,         ///< a linear system was (numerically) singular
    Boundary,         ///< the flow kept hitting the U_alpha barrier
    Infeasible        ///< no admissible configuration exists at this resolution
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "invalid_argument";
        case ErrorKind::GridMismatch: return "grid_mismatch";
        case ErrorKind::UnderResolved: return "under_resolved";
        case ErrorKind::NotConverged: return "not_converged";
        case ErrorKind::Singular: return "singular";
        case ErrorKind::Boundary: return "boundary";
        case ErrorKind::Infeasible: return "infeasible";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline void require(bool condition, ErrorKind kind, const std::string& message) {
    if (!condition) {
        throw Error(kind, message);
    }
}

}  // namespace normsolve
