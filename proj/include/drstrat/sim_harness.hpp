#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "drstrat/problem.hpp"
#include "drstrat/rng.hpp"

namespace drstrat {

// Conditional output model Y | X = x ~ Normal(mu_y(x), sigma_y(x)) with the
// binary response g = 1(Y > threshold).
struct ToyNormal {
    double threshold;
};

// Bernoulli response with a known per-point mean; stands in for workloads
// whose conditional exceedance probabilities come from an external table.
struct TableBernoulli {
    ConditionalMeanTable means;
};

using SimulatorSpec = std::variant<ToyNormal, TableBernoulli>;

double toy_mu_y(double x);
double toy_sigma_y(double x);
// P(Y > threshold | x) = 1 - Phi((threshold - mu_y) / sigma_y).
double toy_conditional_mean(double x, double threshold);

// Bound spec + grid with per-index tables precomputed; the hot path for batch
// draws. Construction verifies sigma_y > 0 across the grid for ToyNormal and
// the table length for TableBernoulli.
class Simulator {
public:
    Simulator(SimulatorSpec spec, GridPtr grid);

    std::uint8_t draw(std::size_t index, Rng& rng) const;
    double exact_mean(std::size_t index) const { return exact_[index]; }
    ConditionalMeanTable exact_means() const { return ConditionalMeanTable{exact_}; }
    const GridPtr& grid() const { return grid_; }

private:
    GridPtr grid_;
    bool table_;
    double threshold_ = 0.0;
    std::vector<double> mu_, sigma_; // ToyNormal
    std::vector<double> exact_;      // E[g | x_i] for either spec
};

// One response draw at an x that must lie on the simulator's grid.
std::uint8_t simulate_output(const Simulator& sim, double x, Rng& rng);

// Per-point empirical means from pilot_per_point draws each, seeded per point.
ConditionalMeanTable pilot_estimate_cond_means(const Simulator& sim,
                                               std::size_t pilot_per_point, std::uint64_t seed);

// One sampling round: n_k inverse-CDF draws from the conditional reference
// distribution of each stratum, each followed by one simulator call.
SampleBatch draw_batch(const Problem& pb, const AllocationVector& allocation,
                       const Simulator& sim, Rng& rng);

struct ReplicationSummary {
    double mean = 0.0;     // across replications
    double variance = 0.0; // unbiased sample variance of the estimator
    double se_mean = 0.0;  // sqrt(variance / R)
};

struct ReplicationResult {
    std::size_t replications = 0;
    std::vector<ReplicationSummary> per_model; // one per evaluation pmf
    std::size_t total_simulator_calls = 0;     // R * N_T, independent of M
};

// R independent sampling rounds; every round's batch is reused across all
// evaluation pmfs (the estimator reweights, it never re-simulates). Each
// replication runs on its own seed substream, so results are identical for
// any thread count.
ReplicationResult replicate_experiment(const Problem& pb, const AllocationVector& allocation,
                                       const std::vector<Pmf>& eval_pmfs, std::size_t R,
                                       const Simulator& sim, std::uint64_t seed,
                                       int threads = 0);

// Plain-loop reference implementation; bit-identical to the above.
ReplicationResult replicate_experiment_serial(const Problem& pb,
                                              const AllocationVector& allocation,
                                              const std::vector<Pmf>& eval_pmfs, std::size_t R,
                                              const Simulator& sim, std::uint64_t seed);

} // namespace drstrat
