#pragma once

#include "drstrat/discrete.hpp"
#include "drstrat/estimators.hpp"

namespace drstrat {

// Everything the allocation search needs besides the input-model uncertainty:
// the sampling (reference) distribution, the strata, the conditional output
// means, and the total budget.
struct Problem {
    GridPtr grid;
    Pmf reference;
    Stratification strat;
    ConditionalMeanTable means;
    double n_total;
};

// Validates cross-references: reference lives on `grid` and is strictly
// positive (the reweighting needs full support), the stratification covers the
// grid, the mean table matches it, and the budget admits one draw per stratum.
Problem make_problem(GridPtr grid, Pmf reference, Stratification strat,
                     ConditionalMeanTable means, double n_total);

} // namespace drstrat
