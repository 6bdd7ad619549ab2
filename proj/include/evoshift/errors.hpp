#pragma once

#include <stdexcept>
#include <string>

namespace evoshift {

// Base for every error the library raises on purpose.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// model
struct NoInteriorMaximum : Error { using Error::Error; };
struct NonPositiveMaximum : Error { using Error::Error; };
struct NonPositivePressure : Error { using Error::Error; };

// discretization
struct InvalidGrid : Error { using Error::Error; };

// pde_engine
struct PositivityLoss : Error { using Error::Error; };
struct StepRejected : Error { using Error::Error; };
struct OverflowRisk : Error { using Error::Error; };

// floquet
struct NoConvergence : Error { using Error::Error; };
struct DegenerateMode : Error { using Error::Error; };
struct NonviablePopulation : Error { using Error::Error; };

// asymptotics
struct NoRoot : Error { using Error::Error; };
struct AmbiguousRoot : Error { using Error::Error; };
struct NegativeRadicand : Error { using Error::Error; };
struct DegenerateCurvature : Error { using Error::Error; };

// runner
struct ParseError : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

}  // namespace evoshift
