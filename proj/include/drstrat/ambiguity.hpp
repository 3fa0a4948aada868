#pragma once

#include <utility>
#include <variant>
#include <vector>

#include "drstrat/discrete.hpp"
#include "drstrat/rng.hpp"

namespace drstrat {

// ---------------------------------------------------------------------------
// The four ambiguity-set families. Each set carries its nominal pmf; the size
// parameters bound how far plausible pmfs may stray from it.
// ---------------------------------------------------------------------------

// { p : ||p - nominal||_2 <= gamma }
struct L2Set {
    Pmf nominal;
    double gamma;
};

// { p : W_1(p, nominal) <= gamma } with the 1D cumulative formula.
struct Wass1Set {
    Pmf nominal;
    double gamma;
};

// Scaled-binomial family slice: every pmf generated by some (n_trials, p)
// pair in the parameter grid, truncated to the working grid.
struct BinomialFamilySet {
    Pmf nominal;
    double shift;
    double scale;
    std::vector<std::pair<long long, double>> thetas; // (n_trials, p_success)
};

// Shifted-Rayleigh family slice over (sigma, delta) pairs.
struct RayleighShiftSet {
    Pmf nominal;
    std::vector<std::pair<double, double>> thetas; // (sigma, delta)
};

// First two moments constrained around the nominal's (scalar, 1D inputs):
//   (mean(p) - mu_bar)^2 / sigma_bar            <= gamma1
//   sum p_i (x_i - mu_bar)^2                    <= gamma2_ub * sigma_bar
//   sum p_i (x_i - mu_bar)^2                    >= gamma2_lb * sigma_bar
//                                                  + 2 (mean(p) - mu_bar)^2
// sigma_bar is the nominal's variance.
struct MomentSet {
    Pmf nominal;
    double mu_bar;
    double sigma_bar;
    double gamma1;
    double gamma2_lb;
    double gamma2_ub;
};

using AmbiguitySet = std::variant<L2Set, Wass1Set, BinomialFamilySet, RayleighShiftSet, MomentSet>;

AmbiguitySet make_l2_set(Pmf nominal, double gamma);
AmbiguitySet make_wass1_set(Pmf nominal, double gamma);
AmbiguitySet make_binomial_family_set(Pmf nominal, double shift, double scale,
                                      std::vector<std::pair<long long, double>> thetas);
AmbiguitySet make_rayleigh_shift_set(Pmf nominal,
                                     std::vector<std::pair<double, double>> thetas);
// Computes mu_bar / sigma_bar from the nominal. Requires gamma2_lb <= 1 <= gamma2_ub
// so the nominal itself is a member.
AmbiguitySet make_moment_set(Pmf nominal, double gamma1, double gamma2_lb, double gamma2_ub);

const Pmf& nominal_pmf(const AmbiguitySet& set);
bool is_parametric(const AmbiguitySet& set);
// All pmfs of a parametric family slice, in theta order.
std::vector<Pmf> enumerate_parametric_members(const AmbiguitySet& set);

// ---------------------------------------------------------------------------
// Distances
// ---------------------------------------------------------------------------

double l2_distance(const Pmf& p, const Pmf& q);

// 1-Wasserstein on a shared 1D grid:
//   sum_{i=1}^{n-1} |CDF_p(i) - CDF_q(i)| (x_{i+1} - x_i).
double wasserstein1_distance_1d(const Pmf& p, const Pmf& q);

// p-Wasserstein via the monotone transport plan (optimal in 1D for convex
// ground costs). Production code uses the cumulative formula above; this is
// the transport-plan route, kept for membership cross-checks on small grids.
double wasserstein_transport_distance(const Pmf& p, const Pmf& q, double power);

// ---------------------------------------------------------------------------
// Membership, projection, sampling
// ---------------------------------------------------------------------------

bool contains(const AmbiguitySet& set, const Pmf& p, double tol);

// Returns a member of the set (valid pmf, contains() true). The input is
// first projected onto the simplex; infeasible points are then pulled toward
// the nominal: exactly onto the ball boundary for L2 (bisection on the
// Lagrange multiplier), exactly along the nominal ray for Wass1/Moment (the
// constraints are linear or quadratic in the ray parameter, solved in closed
// form). Members are fixed points. Parametric sets never need projection.
Pmf project(const AmbiguitySet& set, const Pmf& p);

// Random member: parametric sets draw a theta uniformly; the others perturb
// the nominal along a zero-sum direction and project back. Falls back to the
// nominal if projection fails.
Pmf sample_member(const AmbiguitySet& set, Rng& rng);
Pmf sample_member(const AmbiguitySet& set, std::uint64_t seed);

// Euclidean projection of an arbitrary vector onto the probability simplex.
std::vector<double> project_to_simplex(std::vector<double> v);

// project() on raw mass vectors (entries may be negative; the simplex step
// comes first). Hot path for ascent loops that avoid Pmf construction.
std::vector<double> project_masses(const AmbiguitySet& set, std::vector<double> raw);

} // namespace drstrat
