#include "drstrat/discrete.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace drstrat {

namespace {

constexpr double kMassSumSlack = 1e-6;   // beyond this a pmf is a modeling bug
constexpr double kNegativeSlack = 1e-12; // float noise allowance below zero

std::vector<double> normalized(std::vector<double> w, double worst_sum_error) {
    double total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] < 0.0) {
            if (w[i] < -kNegativeSlack)
                throw ConfigError("pmf mass at index " + std::to_string(i) +
                                  " is negative: " + std::to_string(w[i]));
            w[i] = 0.0;
        }
        total += w[i];
    }
    if (total <= 0.0) throw ConfigError("pmf has zero total mass");
    if (worst_sum_error >= 0.0 && std::abs(total - 1.0) > worst_sum_error)
        throw ConfigError("pmf mass sums to " + std::to_string(total) +
                          ", outside tolerance " + std::to_string(worst_sum_error));
    for (auto& v : w) v /= total;
    return w;
}

} // namespace

Grid::Grid(std::vector<double> points) : points_(std::move(points)) {
    if (points_.size() < 2) throw ConfigError("grid needs at least 2 points");
    for (std::size_t i = 1; i < points_.size(); ++i) {
        if (!(points_[i] > points_[i - 1]))
            throw ConfigError("grid points must be strictly increasing (index " +
                              std::to_string(i) + ")");
    }
}

bool Grid::same_points(const Grid& other) const {
    return points_ == other.points_;
}

GridPtr make_grid(std::vector<double> points) {
    return std::make_shared<const Grid>(std::move(points));
}

GridPtr make_affine_integer_grid(long long i_min, long long i_max, double shift, double scale) {
    if (i_max < i_min) throw ConfigError("affine grid: i_max < i_min");
    if (!(scale > 0.0)) throw ConfigError("affine grid: scale must be positive");
    std::vector<double> pts;
    pts.reserve(static_cast<std::size_t>(i_max - i_min + 1));
    for (long long i = i_min; i <= i_max; ++i)
        pts.push_back((static_cast<double>(i) - shift) / scale);
    return make_grid(std::move(pts));
}

GridPtr make_linspace_grid(double start, double step, std::size_t count) {
    if (!(step > 0.0)) throw ConfigError("linspace grid: step must be positive");
    std::vector<double> pts(count);
    for (std::size_t i = 0; i < count; ++i) pts[i] = start + step * static_cast<double>(i);
    return make_grid(std::move(pts));
}

Pmf Pmf::from_mass(GridPtr grid, std::vector<double> mass) {
    if (!grid) throw ConfigError("pmf: null grid");
    if (mass.size() != grid->size())
        throw GridMismatch("pmf mass length " + std::to_string(mass.size()) +
                           " does not match grid size " + std::to_string(grid->size()));
    return Pmf(std::move(grid), normalized(std::move(mass), kMassSumSlack));
}

Pmf Pmf::from_weights(GridPtr grid, std::vector<double> weights) {
    if (!grid) throw ConfigError("pmf: null grid");
    if (weights.size() != grid->size())
        throw GridMismatch("pmf weight length " + std::to_string(weights.size()) +
                           " does not match grid size " + std::to_string(grid->size()));
    return Pmf(std::move(grid), normalized(std::move(weights), -1.0));
}

double Pmf::mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < mass_.size(); ++i) m += mass_[i] * (*grid_)[i];
    return m;
}

double Pmf::second_central_moment(double center) const {
    double v = 0.0;
    for (std::size_t i = 0; i < mass_.size(); ++i) {
        double d = (*grid_)[i] - center;
        v += mass_[i] * d * d;
    }
    return v;
}

void require_same_grid(const Pmf& a, const Pmf& b) {
    if (a.grid() == b.grid()) return;
    if (!a.grid()->same_points(*b.grid()))
        throw GridMismatch("pmfs live on different grids");
}

Stratification::Stratification(std::size_t grid_size,
                               std::vector<std::vector<std::size_t>> index_sets)
    : grid_size_(grid_size), index_sets_(std::move(index_sets)) {
    if (index_sets_.empty()) throw ConfigError("stratification: no strata");
    stratum_of_.assign(grid_size_, grid_size_); // sentinel: unassigned
    for (std::size_t k = 0; k < index_sets_.size(); ++k) {
        if (index_sets_[k].empty())
            throw ConfigError("stratification: stratum " + std::to_string(k) + " is empty");
        for (std::size_t i : index_sets_[k]) {
            if (i >= grid_size_)
                throw ConfigError("stratification: index " + std::to_string(i) +
                                  " out of range");
            if (stratum_of_[i] != grid_size_)
                throw ConfigError("stratification: index " + std::to_string(i) +
                                  " appears in two strata");
            stratum_of_[i] = k;
        }
    }
    for (std::size_t i = 0; i < grid_size_; ++i) {
        if (stratum_of_[i] == grid_size_)
            throw ConfigError("stratification: index " + std::to_string(i) +
                              " not covered by any stratum");
    }
}

Stratification Stratification::equal_contiguous(std::size_t grid_size, std::size_t num_strata) {
    if (num_strata == 0 || num_strata > grid_size)
        throw ConfigError("equal_contiguous: invalid stratum count");
    if (grid_size % num_strata != 0)
        throw ConfigError("equal_contiguous: grid size " + std::to_string(grid_size) +
                          " not divisible by " + std::to_string(num_strata));
    std::size_t width = grid_size / num_strata;
    std::vector<std::vector<std::size_t>> sets(num_strata);
    for (std::size_t k = 0; k < num_strata; ++k) {
        sets[k].resize(width);
        std::iota(sets[k].begin(), sets[k].end(), k * width);
    }
    return Stratification(grid_size, std::move(sets));
}

StrataProbabilities strata_probabilities(const Pmf& pmf, const Stratification& strat) {
    if (pmf.size() != strat.grid_size())
        throw GridMismatch("stratification built for a different grid size");
    StrataProbabilities out;
    out.omega.resize(strat.num_strata());
    for (std::size_t k = 0; k < strat.num_strata(); ++k) {
        double w = 0.0;
        for (std::size_t i : strat.stratum(k)) w += pmf[i];
        if (w <= 0.0)
            throw StratumZeroProbability("stratum " + std::to_string(k) +
                                         " carries no probability mass");
        out.omega[k] = w;
    }
    return out;
}

Pmf conditional_pmf(const Pmf& pmf, const Stratification& strat, std::size_t k) {
    if (pmf.size() != strat.grid_size())
        throw GridMismatch("stratification built for a different grid size");
    if (k >= strat.num_strata()) throw ConfigError("conditional_pmf: stratum index out of range");
    double w = 0.0;
    for (std::size_t i : strat.stratum(k)) w += pmf[i];
    if (w <= 0.0)
        throw StratumZeroProbability("stratum " + std::to_string(k) +
                                     " carries no probability mass");
    std::vector<double> mass(pmf.size(), 0.0);
    for (std::size_t i : strat.stratum(k)) mass[i] = pmf[i] / w;
    return Pmf::from_mass(pmf.grid(), std::move(mass));
}

Pmf reference_from_nominals(const std::vector<Pmf>& nominals) {
    if (nominals.empty()) throw ConfigError("reference_from_nominals: empty nominal list");
    for (std::size_t m = 1; m < nominals.size(); ++m)
        require_same_grid(nominals[0], nominals[m]);
    std::vector<double> mass(nominals[0].size(), 0.0);
    for (const Pmf& p : nominals)
        for (std::size_t i = 0; i < mass.size(); ++i) mass[i] += p[i];
    for (auto& v : mass) v /= static_cast<double>(nominals.size());
    return Pmf::from_mass(nominals[0].grid(), std::move(mass));
}

Pmf scaled_binomial_pmf(const GridPtr& grid, long long n_trials, double p_success,
                        double shift, double scale) {
    if (n_trials < 1) throw ConfigError("scaled_binomial_pmf: n_trials must be >= 1");
    if (!(p_success > 0.0 && p_success < 1.0))
        throw ConfigError("scaled_binomial_pmf: p_success must lie in (0, 1)");
    if (!(scale > 0.0)) throw ConfigError("scaled_binomial_pmf: scale must be positive");
    const double log_p = std::log(p_success);
    const double log_q = std::log1p(-p_success);
    const double lg_n1 = std::lgamma(static_cast<double>(n_trials) + 1.0);
    std::vector<double> w(grid->size(), 0.0);
    for (std::size_t i = 0; i < grid->size(); ++i) {
        double b_real = (*grid)[i] * scale + shift;
        double b_round = std::round(b_real);
        if (std::abs(b_real - b_round) > 1e-9)
            throw NonIntegerPreimage("grid point " + std::to_string((*grid)[i]) +
                                     " has no integer preimage");
        long long b = static_cast<long long>(b_round);
        if (b < 0 || b > n_trials) continue; // impossible count, zero mass
        double db = static_cast<double>(b);
        double log_mass = lg_n1 - std::lgamma(db + 1.0) -
                          std::lgamma(static_cast<double>(n_trials) - db + 1.0) +
                          db * log_p + (static_cast<double>(n_trials) - db) * log_q;
        w[i] = std::exp(log_mass);
    }
    return Pmf::from_weights(grid, std::move(w));
}

Pmf discretized_rayleigh_pmf(const GridPtr& grid, double sigma, double delta) {
    if (!(sigma > 0.0)) throw ConfigError("discretized_rayleigh_pmf: sigma must be positive");
    std::vector<double> w(grid->size());
    const double inv_s2 = 1.0 / (sigma * sigma);
    for (std::size_t i = 0; i < grid->size(); ++i) {
        double d = (*grid)[i] - delta;
        if (!(d > 0.0))
            throw NonPositiveDensityArgument("grid point " + std::to_string((*grid)[i]) +
                                             " - delta is not positive");
        w[i] = d * inv_s2 * std::exp(-0.5 * d * d * inv_s2);
    }
    return Pmf::from_weights(grid, std::move(w));
}

} // namespace drstrat
