#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "drstrat/errors.hpp"

namespace drstrat {

// Finite support x_1 < x_2 < ... < x_n of a discrete input variable.
class Grid {
public:
    explicit Grid(std::vector<double> points);

    std::size_t size() const { return points_.size(); }
    double operator[](std::size_t i) const { return points_[i]; }
    const std::vector<double>& points() const { return points_; }
    double span() const { return points_.back() - points_.front(); }

    bool same_points(const Grid& other) const;

private:
    std::vector<double> points_;
};

using GridPtr = std::shared_ptr<const Grid>;

GridPtr make_grid(std::vector<double> points);

// Grid of values (i - shift) / scale for integer i in [i_min, i_max].
GridPtr make_affine_integer_grid(long long i_min, long long i_max, double shift, double scale);

// Grid start, start + step, ..., start + (count-1) * step.
GridPtr make_linspace_grid(double start, double step, std::size_t count);

// Probability mass vector over a Grid. Always nonnegative and summing to 1
// (renormalized on construction).
class Pmf {
public:
    // Masses expected to already sum to 1; deviations up to 1e-6 are
    // renormalized away, larger ones are rejected as modeling bugs.
    static Pmf from_mass(GridPtr grid, std::vector<double> mass);

    // Arbitrary nonnegative weights, normalized to a pmf. Used for truncated
    // parametric families and internal search iterates.
    static Pmf from_weights(GridPtr grid, std::vector<double> weights);

    const GridPtr& grid() const { return grid_; }
    const std::vector<double>& mass() const { return mass_; }
    std::size_t size() const { return mass_.size(); }
    double operator[](std::size_t i) const { return mass_[i]; }

    double mean() const;
    // Second central moment about a given center (not necessarily own mean).
    double second_central_moment(double center) const;

private:
    Pmf(GridPtr grid, std::vector<double> mass)
        : grid_(std::move(grid)), mass_(std::move(mass)) {}

    GridPtr grid_;
    std::vector<double> mass_;
};

void require_same_grid(const Pmf& a, const Pmf& b);

// Partition of grid indices {0,...,n-1} into K nonempty, disjoint strata.
class Stratification {
public:
    Stratification(std::size_t grid_size, std::vector<std::vector<std::size_t>> index_sets);

    static Stratification equal_contiguous(std::size_t grid_size, std::size_t num_strata);

    std::size_t num_strata() const { return index_sets_.size(); }
    std::size_t grid_size() const { return grid_size_; }
    const std::vector<std::size_t>& stratum(std::size_t k) const { return index_sets_[k]; }
    const std::vector<std::vector<std::size_t>>& index_sets() const { return index_sets_; }
    // Stratum containing grid index i.
    std::size_t stratum_of(std::size_t i) const { return stratum_of_[i]; }

private:
    std::size_t grid_size_;
    std::vector<std::vector<std::size_t>> index_sets_;
    std::vector<std::size_t> stratum_of_;
};

// Per-stratum probabilities omega_k = sum_{i in I_k} p_i.
struct StrataProbabilities {
    std::vector<double> omega;

    std::size_t size() const { return omega.size(); }
    double operator[](std::size_t k) const { return omega[k]; }
};

// Throws StratumZeroProbability if any stratum carries no mass. Callers that
// tolerate empty strata (evaluation pmfs inside the estimator) sum masses
// directly instead.
StrataProbabilities strata_probabilities(const Pmf& pmf, const Stratification& strat);

// Conditional distribution given stratum k: mass p_i / omega_k on I_k, zero
// elsewhere (returned over the full grid).
Pmf conditional_pmf(const Pmf& pmf, const Stratification& strat, std::size_t k);

// Pointwise average of the nominal pmfs — the default sampling distribution
// when several input models share one budget.
Pmf reference_from_nominals(const std::vector<Pmf>& nominals);

// Pmf of X = (B - shift)/scale with B ~ Bin(n_trials, p_success), truncated
// to the grid and renormalized. Each grid point must map back to an integer.
Pmf scaled_binomial_pmf(const GridPtr& grid, long long n_trials, double p_success,
                        double shift, double scale);

// Masses proportional to the shifted Rayleigh density
// (x - delta)/sigma^2 * exp(-((x-delta)/sigma)^2 / 2), renormalized.
// Requires x_i - delta > 0 over the whole grid.
Pmf discretized_rayleigh_pmf(const GridPtr& grid, double sigma, double delta);

} // namespace drstrat
