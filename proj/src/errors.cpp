// errors.cpp

#include "gcl/errors.hpp"

namespace gcl {

const char* to_string(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::InvalidDimension: return "invalid-dimension";
    case ErrorKind::DimensionMismatch: return "dimension-mismatch";
    case ErrorKind::UnsupportedDrive: return "unsupported-drive";
    case ErrorKind::Consistency: return "consistency";
    case ErrorKind::StepSize: return "step-size";
    case ErrorKind::Instability: return "instability";
    case ErrorKind::NonConvergence: return "non-convergence";
    case ErrorKind::Ambiguity: return "ambiguity";
    case ErrorKind::NoTemperature: return "no-temperature";
    case ErrorKind::EmptyBranch: return "empty-branch";
    case ErrorKind::Config: return "config";
    }
    return "unknown";
}

} // namespace gcl
