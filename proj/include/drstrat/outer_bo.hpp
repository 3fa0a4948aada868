#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "drstrat/gp.hpp"
#include "drstrat/inner_solver.hpp"
#include "drstrat/problem.hpp"
#include "drstrat/rng.hpp"

namespace drstrat {

struct BOConfig {
    std::size_t n_initial = 0;    // 0 -> max(2K, 10)
    std::size_t n_iterations = 60;
    double floor = 1.0;           // minimum per-stratum budget during the continuous search
    std::size_t acq_restarts = 256;
    std::uint64_t seed = 0;
    int threads = 0;
    bool seed_with_str_m = true;  // run the nominal-only benchmark first and seed the design
    bool integer_polish = true;   // greedy +-1 budget moves on the final integer allocation
    InnerSolverConfig inner;
};

struct TraceRow {
    std::size_t iteration = 0;    // 1-based over all objective evaluations
    std::vector<double> allocation;
    double value = 0.0;
    double best_so_far = 0.0;
    double wall_ms = 0.0;
};

struct SolveReport {
    AllocationVector best_allocation;    // integer, sums to the budget
    double best_value = 0.0;             // objective re-evaluated at best_allocation
    std::string method;                  // "dr-strat" or "str-m"
    std::vector<TraceRow> trace;
    std::vector<double> per_model_values; // at best_allocation
    std::vector<Pmf> worst_case_witnesses;
    std::size_t argmax_model = 0;
};

// Minimize the worst-case estimator variance over integer allocations summing
// to the budget: Bayesian optimization (GP on normalized allocations vs log
// variance, expected improvement) over the continuous slab, then sum-preserving
// rounding and re-evaluation. The benchmark (nominal) solution and the uniform
// allocation always enter the final selection, so the returned allocation is
// never worse than either on this objective.
SolveReport solve_dr_strat(const Problem& problem, const std::vector<AmbiguitySet>& sets,
                           const BOConfig& cfg = {});

// Same machinery with the plain objective max_m variance(n, nominal_m): treats
// the nominal distributions as the truth. The robustness baseline.
SolveReport solve_str_m(const Problem& problem, const std::vector<Pmf>& nominals,
                        const BOConfig& cfg = {});

// Largest-remainder rounding onto {integer n : sum = round(total), n_k >= 1}.
AllocationVector round_allocation(const AllocationVector& n);

// The inner-solver configuration solve_dr_strat derives from an outer config.
// Follow-up evaluations (compare/evaluate commands, acceptance checks) use it
// so allocations rank exactly as they did inside the solve.
InnerSolverConfig inner_config_for(const BOConfig& cfg);

// EI maximization over the slab {sum = n_total, n_k >= floor}: Dirichlet
// multistart plus local ascent on the top candidates. best_value is in the
// GP's (log) scale.
std::vector<double> propose_next(const GPSurrogate& gp, double n_total, double floor,
                                 std::size_t acq_restarts, double best_value, Rng& rng,
                                 int threads = 0);

// Project onto the slab {sum = n_total, n_k >= floor} (Euclidean).
std::vector<double> project_to_slab(std::vector<double> n, double n_total, double floor);

} // namespace drstrat
