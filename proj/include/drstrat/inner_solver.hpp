#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "drstrat/ambiguity.hpp"
#include "drstrat/estimators.hpp"

namespace drstrat {

struct InnerSolverConfig {
    int starts = 16;          // ascent restarts per non-parametric set (start 0 = nominal)
    int max_iterations = 2000;
    double grad_tol = 1e-9;   // on the unit-step projected-gradient displacement
    double armijo_c = 1e-4;
    std::uint64_t seed = 0;
    int threads = 0;          // 0 -> resolve_threads default
};

// Per-set solve diagnostics, one entry per start (or per theta for
// parametric sets, where every "start" is an exact evaluation).
struct InnerDiagnostics {
    std::vector<int> iterations;
    std::vector<char> converged;
    std::vector<double> start_values;
    int best_start = -1;
    bool failed = false;
};

struct InnerResult {
    double value = 0.0;             // max over models of the worst-case variance
    std::size_t argmax_model = 0;
    Pmf argmax_pmf;
    std::vector<double> per_model_values; // NaN for models whose solve failed
    std::vector<Pmf> per_model_pmfs;
    std::vector<InnerDiagnostics> per_model_diag;
};

// Worst-case variance of the reweighted stratified estimator at allocation n:
// max over models m and pmfs p in set m of the analytic variance. Models are
// solved independently; a model's failure is recorded (value NaN) and the op
// throws only if every model fails. Ties break toward the lowest model index.
InnerResult worst_case_variance(const AllocationVector& n, const std::vector<AmbiguitySet>& sets,
                                const Pmf& ref, const Stratification& strat,
                                const ConditionalMeanTable& means,
                                const InnerSolverConfig& cfg = {});

// Single-set maximization. Parametric families are solved exactly by
// enumerating the theta grid; ball/moment sets run multi-start projected
// gradient ascent (analytic gradient, Armijo backtracking) from the nominal
// plus sampled members. The value is a certified lower bound on the true
// maximum (the objective is nonconvex) and never below the nominal's value.
std::pair<double, Pmf> maximize_over_set(const AllocationVector& n, const AmbiguitySet& set,
                                         const Pmf& ref, const Stratification& strat,
                                         const ConditionalMeanTable& means,
                                         const InnerSolverConfig& cfg = {});

// Test oracle: exhaustive search over the simplex lattice {c/R : sum c = R}
// intersected with the set (plus the nominal, always a member). Parametric
// sets fall back to exact enumeration. Only for grids of at most 6 points.
std::pair<double, Pmf> brute_force_inner(const AllocationVector& n, const AmbiguitySet& set,
                                         const Pmf& ref, const Stratification& strat,
                                         const ConditionalMeanTable& means,
                                         std::size_t grid_resolution);

// Gradient of the variance in the evaluation pmf's masses:
//   d/dp_i = (1/n_k) * 2 m_i [ omega_ref_k p_i / p_ref_i - sum_{j in I_k} m_j p_j ]
// for i in stratum k. Exposed for finite-difference validation.
std::vector<double> variance_gradient(const AllocationVector& n, const Pmf& eval, const Pmf& ref,
                                      const Stratification& strat,
                                      const ConditionalMeanTable& means);

} // namespace drstrat
