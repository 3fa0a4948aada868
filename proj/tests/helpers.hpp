#pragma once

// Shared fixtures for the unit and acceptance tests.

#include <cmath>
#include <cstdint>
#include <vector>

#include "drstrat/ambiguity.hpp"
#include "drstrat/discrete.hpp"
#include "drstrat/estimators.hpp"
#include "drstrat/problem.hpp"
#include "drstrat/sim_harness.hpp"

namespace testkit {

// The two-turbine toy preset used across the suite: 35-point grid
// (i - 40)/sqrt(20) for i in 23..57, scaled-binomial nominals, average
// reference, 7 contiguous strata, exceedance threshold 5.2, budget 100.
struct ToyPreset {
    drstrat::GridPtr grid;
    std::vector<drstrat::Pmf> nominals;
    drstrat::Pmf reference;
    drstrat::Stratification strat;
    drstrat::ConditionalMeanTable means;
    drstrat::Simulator sim;
    double n_total;
    double threshold;

    drstrat::Problem problem() const {
        return drstrat::make_problem(grid, reference, strat, means, n_total);
    }
};

inline ToyPreset make_toy_preset() {
    using namespace drstrat;
    const double scale = std::sqrt(20.0);
    GridPtr grid = make_affine_integer_grid(23, 57, 40.0, scale);
    std::vector<Pmf> nominals{scaled_binomial_pmf(grid, 75, 0.55, 40.0, scale),
                              scaled_binomial_pmf(grid, 85, 0.45, 40.0, scale)};
    Pmf reference = reference_from_nominals(nominals);
    Stratification strat = Stratification::equal_contiguous(grid->size(), 7);
    Simulator sim(ToyNormal{5.2}, grid);
    ConditionalMeanTable means = sim.exact_means();
    return ToyPreset{grid,  std::move(nominals), std::move(reference), std::move(strat),
                     means, std::move(sim),      100.0,                5.2};
}

// Small 4-point / 2-strata problem for solver tests: cheap enough for
// brute-force cross-checks, rich enough that the allocation matters.
struct SmallProblem {
    drstrat::GridPtr grid;
    drstrat::Pmf reference;
    drstrat::Stratification strat;
    drstrat::ConditionalMeanTable means;
};

inline SmallProblem make_small_problem() {
    using namespace drstrat;
    GridPtr grid = make_grid({0.0, 1.0, 2.0, 3.0});
    Pmf ref = Pmf::from_mass(grid, {0.4, 0.3, 0.2, 0.1});
    Stratification strat(4, {{0, 1}, {2, 3}});
    ConditionalMeanTable means = make_conditional_mean_table({0.05, 0.2, 0.5, 0.9});
    return SmallProblem{grid, std::move(ref), std::move(strat), std::move(means)};
}

// The variance formula on raw (not necessarily normalized) mass vectors;
// the tests' finite-difference oracle.
inline double raw_variance(const std::vector<double>& n_k, const std::vector<double>& p,
                           const std::vector<double>& ref,
                           const drstrat::Stratification& strat,
                           const std::vector<double>& means) {
    double total = 0.0;
    for (std::size_t k = 0; k < strat.num_strata(); ++k) {
        double omega = 0.0, quad = 0.0, lin = 0.0;
        for (std::size_t i : strat.stratum(k)) {
            omega += ref[i];
            quad += means[i] * p[i] * p[i] / ref[i];
            lin += means[i] * p[i];
        }
        total += std::max(omega * quad - lin * lin, 0.0) / n_k[k];
    }
    return total;
}

} // namespace testkit
