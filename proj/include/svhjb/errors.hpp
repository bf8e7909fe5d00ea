#pragma once

#include <stdexcept>
#include <string>

namespace svhjb {

// Base class for every domain error raised by this library. Catch this to
// handle "the computation refused" as opposed to a programming error.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// geometry
struct NotOnGraph : Error { using Error::Error; };
struct DegenerateGradient : Error { using Error::Error; };
struct OutsideTube : Error { using Error::Error; };
struct NoConvergence : Error { using Error::Error; };
struct EmptySet : Error { using Error::Error; };
struct NoBoundaryFound : Error { using Error::Error; };
struct TooCloseToTerminal : Error { using Error::Error; };
struct OracleDerivativeFailure : Error { using Error::Error; };

// reference families
struct RadiusNonpositive : Error { using Error::Error; };
struct EmptyInterval : Error { using Error::Error; };

// flows
struct LeftTube : Error { using Error::Error; };
struct CompetitorOffBoundary : Error { using Error::Error; };
struct StepTooLarge : Error { using Error::Error; };

// Hamiltonian / control
struct NonTangentialZeta : Error { using Error::Error; };
struct IndefiniteQuadratic : Error { using Error::Error; };
struct EmptyControlGrid : Error { using Error::Error; };
struct DegenerateYGradient : Error { using Error::Error; };
struct ScalarizationBlowup : Error { using Error::Error; };

// PDE solver
struct CFLViolation : Error { using Error::Error; };
struct GridTooCoarse : Error { using Error::Error; };

// experiment runner
struct ConfigError : Error { using Error::Error; };

} // namespace svhjb
