#include "drstrat/problem.hpp"

#include <string>

namespace drstrat {

Problem make_problem(GridPtr grid, Pmf reference, Stratification strat,
                     ConditionalMeanTable means, double n_total) {
    if (!grid) throw ConfigError("problem: null grid");
    if (!reference.grid()->same_points(*grid))
        throw GridMismatch("problem: reference pmf is on a different grid");
    if (strat.grid_size() != grid->size())
        throw GridMismatch("problem: stratification covers " +
                           std::to_string(strat.grid_size()) + " points, grid has " +
                           std::to_string(grid->size()));
    if (means.size() != grid->size())
        throw GridMismatch("problem: conditional mean table covers " +
                           std::to_string(means.size()) + " points, grid has " +
                           std::to_string(grid->size()));
    for (std::size_t i = 0; i < reference.size(); ++i)
        if (reference[i] < 1e-12)
            throw SupportViolation("problem: reference mass vanishes at grid index " +
                                   std::to_string(i));
    if (n_total < static_cast<double>(strat.num_strata()))
        throw InfeasibleBudget("problem: budget " + std::to_string(n_total) +
                               " cannot give every one of " +
                               std::to_string(strat.num_strata()) + " strata a draw");
    return Problem{std::move(grid), std::move(reference), std::move(strat), std::move(means),
                   n_total};
}

} // namespace drstrat
