#pragma once

#include <cstdint>
#include <vector>

#include "drstrat/discrete.hpp"
#include "drstrat/rng.hpp"

namespace drstrat {

// Conditional output means E[g(x_i)] per grid point. g is an exceedance
// indicator, so every entry lies in [0, 1] and E[g^2 | x] = E[g | x].
struct ConditionalMeanTable {
    std::vector<double> means;

    std::size_t size() const { return means.size(); }
    double operator[](std::size_t i) const { return means[i]; }
};

ConditionalMeanTable make_conditional_mean_table(std::vector<double> means);

// Per-stratum simulation budgets n_k summing to the total budget.
// Continuous during the outer search, integer at output.
struct AllocationVector {
    std::vector<double> budgets;

    std::size_t size() const { return budgets.size(); }
    double operator[](std::size_t k) const { return budgets[k]; }
    double total() const;
    bool is_integer(double tol = 1e-9) const;
};

// Validates sum(budgets) == n_total within 1e-9.
AllocationVector make_allocation(std::vector<double> budgets, double n_total);

// Samples drawn per stratum: grid index of each input and its binary output.
struct StratumSamples {
    std::vector<std::size_t> point_index;
    std::vector<std::uint8_t> g;
};

struct SampleBatch {
    std::vector<StratumSamples> strata;

    std::size_t total_draws() const;
};

// mu = sum_i p_i E[g(x_i)].
double true_mean(const Pmf& pmf, const ConditionalMeanTable& means);

// Sample mean of raw outputs.
double crude_mc_estimate(const std::vector<std::uint8_t>& outputs);

// Conventional stratified estimator: sum_k omega_k * within-stratum mean.
double stratified_estimate(const SampleBatch& batch, const StrataProbabilities& omega);

// n_k = N_T * omega_k sigma_k / sum_j omega_j sigma_j (continuous).
AllocationVector neyman_allocation(const StrataProbabilities& omega,
                                   const std::vector<double>& sigma, double n_total);

// DR-strat estimator: samples drawn from the conditional reference
// distribution, reweighted by the likelihood ratio p_eval / p_ref to
// estimate the mean under eval_pmf:
//   sum_k (omega_ref_k / n_k) sum_j g(X_{j|k}) p_eval(X_{j|k}) / p_ref(X_{j|k}).
double dr_strat_estimate(const SampleBatch& batch, const Pmf& eval_pmf, const Pmf& ref_pmf,
                         const Stratification& strat);

// Analytic variance of the DR-strat estimator:
//   sum_k (1/n_k) [ omega_ref_k sum_{i in I_k} E[g(x_i)] p_eval_i^2 / p_ref_i
//                   - ( sum_{i in I_k} E[g(x_i)] p_eval_i )^2 ].
// This is the objective optimized everywhere else.
double dr_strat_variance(const AllocationVector& n, const Pmf& eval_pmf, const Pmf& ref_pmf,
                         const Stratification& strat, const ConditionalMeanTable& means);

// Inverse-CDF draw from the conditional reference distribution of stratum k.
// Returns a grid index.
std::size_t draw_conditional_index(const Pmf& ref_pmf, const Stratification& strat,
                                   std::size_t k, double omega_k, Rng& rng);

} // namespace drstrat
