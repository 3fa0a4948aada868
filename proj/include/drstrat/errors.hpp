#pragma once

#include <stdexcept>
#include <string>

namespace drstrat {

// Base for all library errors. Config/validation problems derive from
// ConfigError (CLI exit code 2); everything else maps to exit code 3.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

#define DRSTRAT_DEFINE_ERROR(name)                                  \
    class name : public Error {                                     \
    public:                                                         \
        explicit name(const std::string& msg) : Error(msg) {}       \
    }

DRSTRAT_DEFINE_ERROR(GridMismatch);
DRSTRAT_DEFINE_ERROR(StratumZeroProbability);
DRSTRAT_DEFINE_ERROR(NonIntegerPreimage);
DRSTRAT_DEFINE_ERROR(NonPositiveDensityArgument);
DRSTRAT_DEFINE_ERROR(EmptyBatch);
DRSTRAT_DEFINE_ERROR(EmptyStratum);
DRSTRAT_DEFINE_ERROR(AllZeroProducts);
DRSTRAT_DEFINE_ERROR(SupportViolation);
DRSTRAT_DEFINE_ERROR(ZeroBudgetStratum);
DRSTRAT_DEFINE_ERROR(ProjectionDidNotConverge);
DRSTRAT_DEFINE_ERROR(NoStartConverged);
DRSTRAT_DEFINE_ERROR(GridTooLarge);
DRSTRAT_DEFINE_ERROR(InfeasibleBudget);
DRSTRAT_DEFINE_ERROR(GPFitFailure);
DRSTRAT_DEFINE_ERROR(InnerSolverFailure);

#undef DRSTRAT_DEFINE_ERROR

} // namespace drstrat
