#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "drstrat/errors.hpp"

namespace drstrat {

// Gaussian-process surrogate with a squared-exponential kernel and one shared
// lengthscale, fit by marginal likelihood over a fixed hyperparameter grid.
// Inputs are expected pre-normalized (allocations divided by the budget) and
// values pre-transformed (the outer loop trains on log variance).
class GPSurrogate {
public:
    GPSurrogate();
    ~GPSurrogate();
    GPSurrogate(GPSurrogate&&) noexcept;
    GPSurrogate& operator=(GPSurrogate&&) noexcept;

    bool fitted() const;
    std::size_t num_points() const;
    std::size_t dimension() const;
    double lengthscale() const;
    double signal_variance() const;
    double noise_variance() const;

    // Posterior mean and variance at a query point (variance clamped at 0).
    void posterior(const std::vector<double>& x, double& mean, double& var) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;

    friend GPSurrogate gp_fit(const std::vector<std::vector<double>>& inputs,
                              const std::vector<double>& values);
};

// Fits hyperparameters by maximizing the marginal likelihood over lengthscales
// {0.05, 0.1, 0.2, 0.5, 1.0}; signal variance comes from the data variance and
// the noise variance sits at a fixed floor. Duplicate inputs (within 1e-9)
// keep only the latest value. The kernel matrix is made positive definite by
// jitter escalation 1e-10 -> 1e-6; past that, GPFitFailure.
GPSurrogate gp_fit(const std::vector<std::vector<double>>& inputs,
                   const std::vector<double>& values);

// Expected improvement for minimization: E[max(best - V(x), 0)] under the
// posterior. Collapses to max(best - mean, 0) when the posterior is
// (numerically) deterministic.
double expected_improvement(const GPSurrogate& gp, const std::vector<double>& x,
                            double best_value);

} // namespace drstrat
