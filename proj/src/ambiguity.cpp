#include "drstrat/ambiguity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace drstrat {

namespace {

// Pull t just inside a constraint boundary so float roundoff in the mixed
// masses cannot tip membership checks.
constexpr double kInsideFactor = 1.0 - 1e-12;

std::vector<double> mix_toward(const Pmf& nominal, const std::vector<double>& q, double t) {
    std::vector<double> out(q.size());
    for (std::size_t i = 0; i < q.size(); ++i)
        out[i] = nominal[i] + t * (q[i] - nominal[i]);
    return out;
}

double l2_norm_diff(const std::vector<double>& a, const Pmf& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

double wasserstein1_masses(const std::vector<double>& p, const std::vector<double>& q,
                           const Grid& grid) {
    double dist = 0.0;
    double cum = 0.0;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
        cum += p[i] - q[i];
        dist += std::abs(cum) * (grid[i + 1] - grid[i]);
    }
    return dist;
}

double pmf_mean_masses(const std::vector<double>& p, const Grid& grid) {
    double m = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) m += p[i] * grid[i];
    return m;
}

double pmf_scm_masses(const std::vector<double>& p, const Grid& grid, double center) {
    double v = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        double d = grid[i] - center;
        v += p[i] * d * d;
    }
    return v;
}

} // namespace

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

AmbiguitySet make_l2_set(Pmf nominal, double gamma) {
    if (!(gamma >= 0.0)) throw ConfigError("l2 set: gamma must be nonnegative");
    return L2Set{std::move(nominal), gamma};
}

AmbiguitySet make_wass1_set(Pmf nominal, double gamma) {
    if (!(gamma >= 0.0)) throw ConfigError("wasserstein1 set: gamma must be nonnegative");
    return Wass1Set{std::move(nominal), gamma};
}

AmbiguitySet make_binomial_family_set(Pmf nominal, double shift, double scale,
                                      std::vector<std::pair<long long, double>> thetas) {
    if (thetas.empty()) throw ConfigError("binomial family set: empty theta grid");
    // Generating each member validates the (grid, theta) combination up front.
    for (const auto& [n, p] : thetas)
        (void)scaled_binomial_pmf(nominal.grid(), n, p, shift, scale);
    return BinomialFamilySet{std::move(nominal), shift, scale, std::move(thetas)};
}

AmbiguitySet make_rayleigh_shift_set(Pmf nominal,
                                     std::vector<std::pair<double, double>> thetas) {
    if (thetas.empty()) throw ConfigError("rayleigh shift set: empty theta grid");
    for (const auto& [sigma, delta] : thetas)
        (void)discretized_rayleigh_pmf(nominal.grid(), sigma, delta);
    return RayleighShiftSet{std::move(nominal), std::move(thetas)};
}

AmbiguitySet make_moment_set(Pmf nominal, double gamma1, double gamma2_lb, double gamma2_ub) {
    if (!(gamma1 >= 0.0)) throw ConfigError("moment set: gamma1 must be nonnegative");
    if (!(gamma2_lb > 0.0 && gamma2_lb <= 1.0 && gamma2_ub >= 1.0))
        throw ConfigError("moment set: need 0 < gamma2_lb <= 1 <= gamma2_ub so the "
                          "nominal is a member");
    double mu_bar = nominal.mean();
    double sigma_bar = nominal.second_central_moment(mu_bar);
    if (!(sigma_bar > 0.0)) throw ConfigError("moment set: nominal has zero variance");
    return MomentSet{std::move(nominal), mu_bar, sigma_bar, gamma1, gamma2_lb, gamma2_ub};
}

const Pmf& nominal_pmf(const AmbiguitySet& set) {
    return std::visit([](const auto& s) -> const Pmf& { return s.nominal; }, set);
}

bool is_parametric(const AmbiguitySet& set) {
    return std::holds_alternative<BinomialFamilySet>(set) ||
           std::holds_alternative<RayleighShiftSet>(set);
}

std::vector<Pmf> enumerate_parametric_members(const AmbiguitySet& set) {
    std::vector<Pmf> out;
    if (const auto* b = std::get_if<BinomialFamilySet>(&set)) {
        out.reserve(b->thetas.size());
        for (const auto& [n, p] : b->thetas)
            out.push_back(scaled_binomial_pmf(b->nominal.grid(), n, p, b->shift, b->scale));
    } else if (const auto* r = std::get_if<RayleighShiftSet>(&set)) {
        out.reserve(r->thetas.size());
        for (const auto& [sigma, delta] : r->thetas)
            out.push_back(discretized_rayleigh_pmf(r->nominal.grid(), sigma, delta));
    } else {
        throw ConfigError("enumerate_parametric_members: set is not parametric");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Distances
// ---------------------------------------------------------------------------

double l2_distance(const Pmf& p, const Pmf& q) {
    require_same_grid(p, q);
    return l2_norm_diff(p.mass(), q);
}

double wasserstein1_distance_1d(const Pmf& p, const Pmf& q) {
    require_same_grid(p, q);
    return wasserstein1_masses(p.mass(), q.mass(), *p.grid());
}

double wasserstein_transport_distance(const Pmf& p, const Pmf& q, double power) {
    require_same_grid(p, q);
    if (!(power >= 1.0)) throw ConfigError("wasserstein transport: power must be >= 1");
    const Grid& grid = *p.grid();
    const std::size_t n = p.size();
    // Monotone coupling: move mass between the sorted supports front to back.
    std::size_t i = 0, j = 0;
    double a = p[0], b = q[0];
    double cost = 0.0;
    while (i < n && j < n) {
        double m = std::min(a, b);
        if (m > 0.0) cost += m * std::pow(std::abs(grid[i] - grid[j]), power);
        a -= m;
        b -= m;
        if (a <= 1e-15) {
            if (++i < n) a = p[i];
        }
        if (b <= 1e-15) {
            if (++j < n) b = q[j];
        }
    }
    return std::pow(cost, 1.0 / power);
}

// ---------------------------------------------------------------------------
// Membership
// ---------------------------------------------------------------------------

bool contains(const AmbiguitySet& set, const Pmf& p, double tol) {
    require_same_grid(nominal_pmf(set), p);
    if (const auto* s = std::get_if<L2Set>(&set)) {
        return l2_distance(p, s->nominal) <= s->gamma + tol;
    }
    if (const auto* s = std::get_if<Wass1Set>(&set)) {
        return wasserstein1_distance_1d(p, s->nominal) <= s->gamma + tol;
    }
    if (const auto* s = std::get_if<MomentSet>(&set)) {
        double dm = p.mean() - s->mu_bar;
        double v = p.second_central_moment(s->mu_bar);
        if (dm * dm > s->gamma1 * s->sigma_bar + tol) return false;
        if (v > s->gamma2_ub * s->sigma_bar + tol) return false;
        if (v < s->gamma2_lb * s->sigma_bar + 2.0 * dm * dm - tol) return false;
        return true;
    }
    // Parametric: member iff it matches some generated pmf elementwise.
    for (const Pmf& member : enumerate_parametric_members(set)) {
        bool match = true;
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (std::abs(p[i] - member[i]) > tol) {
                match = false;
                break;
            }
        }
        if (match) return true;
    }
    return false;
}

// ---------------------------------------------------------------------------
// Projection
// ---------------------------------------------------------------------------

std::vector<double> project_to_simplex(std::vector<double> v) {
    // Sort-based thresholding (Held et al.): x_i = max(v_i - tau, 0).
    std::vector<double> u(v);
    std::sort(u.begin(), u.end(), std::greater<double>());
    double running = 0.0;
    double tau = 0.0;
    std::size_t rho = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        running += u[i];
        double candidate = (running - 1.0) / static_cast<double>(i + 1);
        if (u[i] - candidate > 0.0) {
            rho = i + 1;
            tau = candidate;
        }
    }
    (void)rho;
    for (auto& x : v) x = std::max(x - tau, 0.0);
    return v;
}

namespace {

// Exact projection onto {q in simplex : ||q - nominal|| <= gamma} via the
// Lagrangian path q(lambda) = P_simplex((p + lambda*nominal) / (1 + lambda)),
// whose distance to the nominal decreases continuously to zero.
std::vector<double> project_l2(const L2Set& set, std::vector<double> p) {
    std::vector<double> q = project_to_simplex(p);
    double d = l2_norm_diff(q, set.nominal);
    if (d <= set.gamma) return q;
    if (set.gamma <= 1e-15) return set.nominal.mass();

    auto point_at = [&](double lam) {
        std::vector<double> z(p.size());
        for (std::size_t i = 0; i < p.size(); ++i)
            z[i] = (p[i] + lam * set.nominal[i]) / (1.0 + lam);
        return project_to_simplex(std::move(z));
    };

    double lo = 0.0, hi = 1.0;
    int doublings = 0;
    while (l2_norm_diff(point_at(hi), set.nominal) > set.gamma) {
        hi *= 2.0;
        if (++doublings > 200)
            throw ProjectionDidNotConverge("l2 projection: multiplier search diverged");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + hi); ++it) {
        double mid = 0.5 * (lo + hi);
        if (l2_norm_diff(point_at(mid), set.nominal) > set.gamma)
            lo = mid;
        else
            hi = mid;
    }
    q = point_at(hi);
    d = l2_norm_diff(q, set.nominal);
    if (d > set.gamma) {
        // Exact radial pull onto the boundary; stays in the simplex because
        // it is a convex combination with the nominal.
        double t = set.gamma / d * kInsideFactor;
        q = mix_toward(set.nominal, q, t);
    }
    return q;
}

std::vector<double> project_wass1(const Wass1Set& set, std::vector<double> p) {
    std::vector<double> q = project_to_simplex(std::move(p));
    double d = wasserstein1_masses(q, set.nominal.mass(), *set.nominal.grid());
    if (d <= set.gamma) return q;
    if (set.gamma <= 1e-15) return set.nominal.mass();
    // W1 to the nominal scales linearly along the nominal ray (the CDF
    // difference scales by t), so the radial pull is exact.
    double t = set.gamma / d * kInsideFactor;
    return mix_toward(set.nominal, q, t);
}

std::vector<double> project_moment(const MomentSet& set, std::vector<double> p) {
    std::vector<double> q = project_to_simplex(std::move(p));
    const Grid& grid = *set.nominal.grid();
    double dm = pmf_mean_masses(q, grid) - set.mu_bar;
    double dv = pmf_scm_masses(q, grid, set.mu_bar) - set.sigma_bar;

    // Along q(t) = nominal + t (q - nominal): mean offset is t*dm and the
    // second-central-moment offset is t*dv, so each constraint is at most
    // quadratic in t and the largest feasible t has a closed form.
    double t = 1.0;
    bool clipped = false;
    auto clip = [&](double bound) {
        if (bound < t) {
            t = bound;
            clipped = true;
        }
    };

    double dm2 = dm * dm;
    if (dm2 > 0.0 && dm2 > set.gamma1 * set.sigma_bar)
        clip(std::sqrt(set.gamma1 * set.sigma_bar / dm2));
    if (dv > 0.0) {
        double room = (set.gamma2_ub - 1.0) * set.sigma_bar;
        if (dv > room) clip(room / dv);
    }
    // (1 - gamma2_lb) sigma_bar + t dv - 2 t^2 dm^2 >= 0
    double c0 = (1.0 - set.gamma2_lb) * set.sigma_bar;
    if (dm2 > 0.0) {
        if (c0 + dv - 2.0 * dm2 < 0.0) {
            double disc = dv * dv + 8.0 * dm2 * c0;
            clip((dv + std::sqrt(disc)) / (4.0 * dm2));
        }
    } else if (dv < 0.0 && c0 + dv < 0.0) {
        clip(c0 / (-dv));
    }

    t = std::clamp(t, 0.0, 1.0);
    if (clipped) t *= kInsideFactor;
    if (t >= 1.0) return q;
    return mix_toward(set.nominal, q, t);
}

} // namespace

std::vector<double> project_masses(const AmbiguitySet& set, std::vector<double> raw) {
    if (raw.size() != nominal_pmf(set).size())
        throw GridMismatch("project_masses: vector length does not match the set's grid");
    if (is_parametric(set))
        throw ConfigError("project: parametric sets are searched over theta, not projected");
    if (const auto* s = std::get_if<L2Set>(&set)) return project_l2(*s, std::move(raw));
    if (const auto* s = std::get_if<Wass1Set>(&set)) return project_wass1(*s, std::move(raw));
    return project_moment(std::get<MomentSet>(set), std::move(raw));
}

Pmf project(const AmbiguitySet& set, const Pmf& p) {
    require_same_grid(nominal_pmf(set), p);
    return Pmf::from_weights(p.grid(), project_masses(set, p.mass()));
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

namespace {

// Perturbation magnitude (in pmf mass units) that comfortably reaches the
// set boundary; projection clips whatever overshoots.
double perturbation_scale(const AmbiguitySet& set) {
    if (const auto* s = std::get_if<L2Set>(&set)) return std::max(s->gamma, 1e-6);
    if (const auto* s = std::get_if<Wass1Set>(&set)) {
        const Grid& g = *s->nominal.grid();
        double mean_dx = g.span() / static_cast<double>(g.size() - 1);
        return std::max(std::min(s->gamma / mean_dx, 1.0), 1e-6);
    }
    return 0.5;
}

} // namespace

Pmf sample_member(const AmbiguitySet& set, Rng& rng) {
    if (is_parametric(set)) {
        auto members = enumerate_parametric_members(set);
        return members[rng.uniform_index(members.size())];
    }
    const Pmf& nominal = nominal_pmf(set);
    const std::size_t n = nominal.size();
    std::vector<double> dir(n);
    double mean = 0.0;
    for (auto& d : dir) {
        d = rng.normal();
        mean += d;
    }
    mean /= static_cast<double>(n);
    double norm = 0.0;
    for (auto& d : dir) {
        d -= mean; // zero-sum: tangent to the simplex
        norm += d * d;
    }
    norm = std::sqrt(norm);
    double radius = (0.25 + 1.75 * rng.uniform()) * perturbation_scale(set);
    std::vector<double> cand(n);
    for (std::size_t i = 0; i < n; ++i)
        cand[i] = nominal[i] + (norm > 0.0 ? radius * dir[i] / norm : 0.0);
    try {
        return project(set, Pmf::from_weights(nominal.grid(), project_to_simplex(std::move(cand))));
    } catch (const Error&) {
        return nominal;
    }
}

Pmf sample_member(const AmbiguitySet& set, std::uint64_t seed) {
    Rng rng(seed);
    return sample_member(set, rng);
}

} // namespace drstrat
