#include "drstrat/inner_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <omp.h>

#include "drstrat/parallel.hpp"

namespace drstrat {

namespace {

constexpr double kRefSupportFloor = 1e-12;
constexpr double kBudgetFloor = 1e-6;

// Variance objective over raw mass vectors, with the per-call constants
// hoisted out of the ascent loop.
struct Objective {
    const Stratification* strat;
    std::vector<double> ref;
    std::vector<double> means;
    std::vector<double> inv_n;     // 1 / n_k
    std::vector<double> omega_ref; // reference stratum mass

    double value(const std::vector<double>& p) const {
        double total = 0.0;
        for (std::size_t k = 0; k < strat->num_strata(); ++k) {
            double quad = 0.0, lin = 0.0;
            for (std::size_t i : strat->stratum(k)) {
                double mp = means[i] * p[i];
                quad += mp * p[i] / ref[i];
                lin += mp;
            }
            total += inv_n[k] * std::max(omega_ref[k] * quad - lin * lin, 0.0);
        }
        return total;
    }

    void gradient(const std::vector<double>& p, std::vector<double>& g) const {
        for (std::size_t k = 0; k < strat->num_strata(); ++k) {
            double lin = 0.0;
            for (std::size_t i : strat->stratum(k)) lin += means[i] * p[i];
            for (std::size_t i : strat->stratum(k))
                g[i] = inv_n[k] * 2.0 * means[i] * (omega_ref[k] * p[i] / ref[i] - lin);
        }
    }
};

Objective make_objective(const AllocationVector& n, const Pmf& ref, const Stratification& strat,
                         const ConditionalMeanTable& means) {
    if (ref.size() != strat.grid_size())
        throw GridMismatch("inner solver: reference pmf and stratification sizes differ");
    if (means.size() != ref.size())
        throw GridMismatch("inner solver: conditional mean table and grid sizes differ");
    if (n.size() != strat.num_strata())
        throw GridMismatch("inner solver: allocation and stratification sizes differ");
    for (std::size_t i = 0; i < ref.size(); ++i)
        if (ref[i] < kRefSupportFloor)
            throw SupportViolation("inner solver: reference mass vanishes at grid index " +
                                   std::to_string(i) +
                                   "; set members there would be unreachable");

    Objective obj;
    obj.strat = &strat;
    obj.ref = ref.mass();
    obj.means = means.means;
    obj.inv_n.resize(n.size());
    obj.omega_ref.resize(n.size());
    for (std::size_t k = 0; k < n.size(); ++k) {
        if (n[k] < kBudgetFloor)
            throw ZeroBudgetStratum("inner solver: stratum " + std::to_string(k) +
                                    " has budget " + std::to_string(n[k]));
        obj.inv_n[k] = 1.0 / n[k];
        double om = 0.0;
        for (std::size_t i : strat.stratum(k)) om += obj.ref[i];
        obj.omega_ref[k] = om;
    }
    return obj;
}

struct AscentOutcome {
    double value = -std::numeric_limits<double>::infinity();
    std::vector<double> p;
    int iterations = 0;
    bool converged = false;
    bool failed = false;
    std::string error;
};

AscentOutcome ascend(const Objective& obj, const AmbiguitySet& set, std::vector<double> start,
                     const InnerSolverConfig& cfg) {
    AscentOutcome out;
    std::vector<double> p = project_masses(set, std::move(start));
    double f = obj.value(p);
    const std::size_t d = p.size();
    std::vector<double> g(d), probe(d), cand(d);

    int it = 0;
    for (; it < cfg.max_iterations; ++it) {
        obj.gradient(p, g);
        for (std::size_t i = 0; i < d; ++i) probe[i] = p[i] + g[i];
        probe = project_masses(set, std::move(probe));
        double disp = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            double dlt = probe[i] - p[i];
            disp += dlt * dlt;
        }
        if (std::sqrt(disp) < cfg.grad_tol) {
            out.converged = true;
            break;
        }

        double alpha = 1.0;
        bool accepted = false;
        for (int halvings = 0; halvings < 60; ++halvings) {
            if (alpha == 1.0) {
                cand = probe;
            } else {
                for (std::size_t i = 0; i < d; ++i) cand[i] = p[i] + alpha * g[i];
                cand = project_masses(set, std::move(cand));
            }
            double fc = obj.value(cand);
            double along = 0.0;
            for (std::size_t i = 0; i < d; ++i) along += g[i] * (cand[i] - p[i]);
            if (fc > f && fc >= f + cfg.armijo_c * along) {
                p.swap(cand);
                f = fc;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            // No improving feasible step at line-search precision: stationary.
            out.converged = true;
            break;
        }
    }

    out.value = f;
    out.p = std::move(p);
    out.iterations = it;
    return out;
}

struct SetSolve {
    double value;
    Pmf argmax;
    InnerDiagnostics diag;
};

SetSolve solve_parametric(const Objective& obj, const AmbiguitySet& set, const GridPtr& grid) {
    auto members = enumerate_parametric_members(set);
    SetSolve out{-std::numeric_limits<double>::infinity(), nominal_pmf(set), {}};
    out.diag.iterations.assign(members.size(), 0);
    out.diag.converged.assign(members.size(), 1);
    out.diag.start_values.resize(members.size());
    for (std::size_t t = 0; t < members.size(); ++t) {
        double v = obj.value(members[t].mass());
        out.diag.start_values[t] = v;
        if (v > out.value) {
            out.value = v;
            out.argmax = members[t];
            out.diag.best_start = static_cast<int>(t);
        }
    }
    (void)grid;
    return out;
}

// Donor/receiver block for pairwise mass moves: receivers are the kBlock
// coordinates with the largest gradient, donors the kBlock carrying mass whose
// removal costs the least first-order value per unit moved. On grids of at
// most kBlock points this covers every pair; on larger grids it bounds the
// number of projections per sweep, which dominate the solve cost.
constexpr std::size_t kBlock = 8;

struct ExchangeBlock {
    std::vector<std::size_t> donors;
    std::vector<std::size_t> receivers;
};

ExchangeBlock rank_exchange_block(const std::vector<double>& p, const std::vector<double>& g,
                                  double step_cap) {
    const std::size_t d = p.size();
    double g_max = *std::max_element(g.begin(), g.end());
    ExchangeBlock blk;
    for (std::size_t i = 0; i < d; ++i)
        if (p[i] > 0.0) blk.donors.push_back(i);
    std::stable_sort(blk.donors.begin(), blk.donors.end(), [&](std::size_t a, std::size_t b) {
        return std::min(step_cap, p[a]) * (g_max - g[a]) >
               std::min(step_cap, p[b]) * (g_max - g[b]);
    });
    if (blk.donors.size() > kBlock) blk.donors.resize(kBlock);
    blk.receivers.resize(d);
    std::iota(blk.receivers.begin(), blk.receivers.end(), std::size_t{0});
    std::stable_sort(blk.receivers.begin(), blk.receivers.end(),
                     [&](std::size_t a, std::size_t b) { return g[a] > g[b]; });
    if (blk.receivers.size() > kBlock) blk.receivers.resize(kBlock);
    return blk;
}

// The objective is a convex quadratic, so its maxima sit at extreme points of
// the feasible set. Random members ascend to whichever face is nearest, which
// can miss transport-style vertices entirely; these deterministic seeds aim at
// them directly: all of one support point's nominal mass pushed onto another
// point, then projected back into the set. The strongest few join the pool.
std::vector<std::vector<double>> extreme_push_starts(const Objective& obj,
                                                     const AmbiguitySet& set,
                                                     std::size_t keep) {
    const std::vector<double>& nom = nominal_pmf(set).mass();
    std::vector<double> g(nom.size());
    obj.gradient(nom, g);
    ExchangeBlock blk = rank_exchange_block(nom, g, 1.0);

    std::vector<std::pair<double, std::size_t>> ranked;
    std::vector<std::vector<double>> cands;
    for (std::size_t i : blk.donors) {
        for (std::size_t j : blk.receivers) {
            if (j == i) continue;
            std::vector<double> c = nom;
            c[j] += c[i];
            c[i] = 0.0;
            c = project_masses(set, std::move(c));
            ranked.emplace_back(obj.value(c), cands.size());
            cands.push_back(std::move(c));
        }
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<std::vector<double>> out;
    for (std::size_t r = 0; r < ranked.size() && r < keep; ++r)
        out.push_back(std::move(cands[ranked[r].second]));
    return out;
}

SetSolve solve_by_ascent(const Objective& obj, const AmbiguitySet& set, const GridPtr& grid,
                         const InnerSolverConfig& cfg) {
    const int S = std::max(cfg.starts, 1);
    const Pmf& nominal = nominal_pmf(set);

    std::vector<std::vector<double>> starts;
    starts.push_back(nominal.mass());
    for (int s = 1; s < S; ++s)
        starts.push_back(sample_member(set, substream_seed(cfg.seed, 0xA5CE, s)).mass());
    for (auto& p : extreme_push_starts(obj, set, static_cast<std::size_t>(std::max(S / 2, 4))))
        starts.push_back(std::move(p));
    const int total = static_cast<int>(starts.size());
    std::vector<AscentOutcome> slots(total);

    int nthreads = resolve_threads(cfg.threads);
#pragma omp parallel for num_threads(nthreads) schedule(dynamic)
    for (int s = 0; s < total; ++s) {
        try {
            slots[s] = ascend(obj, set, std::move(starts[s]), cfg);
        } catch (const Error& e) {
            slots[s].failed = true;
            slots[s].error = e.what();
        }
    }

    SetSolve out{-std::numeric_limits<double>::infinity(), nominal, {}};
    out.diag.iterations.assign(total, 0);
    out.diag.converged.assign(total, 0);
    out.diag.start_values.assign(total, std::numeric_limits<double>::quiet_NaN());
    std::string first_error;
    bool any_ok = false;
    for (int s = 0; s < total; ++s) {
        const AscentOutcome& a = slots[s];
        if (a.failed) {
            if (first_error.empty()) first_error = a.error;
            continue;
        }
        any_ok = true;
        out.diag.iterations[s] = a.iterations;
        out.diag.converged[s] = a.converged ? 1 : 0;
        out.diag.start_values[s] = a.value;
        if (a.value > out.value) {
            out.value = a.value;
            out.argmax = Pmf::from_weights(grid, a.p);
            out.diag.best_start = s;
        }
    }
    if (!any_ok)
        throw NoStartConverged("inner solver: every ascent start failed (" + first_error + ")");

    // Gradient steps stall where curved constraint boundaries meet (the
    // projection keeps folding the step back). A pattern search over pairwise
    // mass exchanges grinds out the remaining corner distance. The full step
    // ladder runs every time — the level matching the leftover corner
    // distance can sit several halvings below the last improving one — but
    // each sweep only projects the gradient-ranked block, which keeps the
    // polish a small constant cost on top of the ascent.
    std::vector<double> p = out.argmax.mass();
    std::vector<double> g(p.size());
    for (double delta = 0.25; delta >= 1e-7; delta *= 0.5) {
        for (int sweep = 0; sweep < 500; ++sweep) {
            obj.gradient(p, g);
            ExchangeBlock blk = rank_exchange_block(p, g, delta);
            std::vector<double> best_cand;
            double best_val = out.value;
            for (std::size_t i : blk.donors) {
                double step = std::min(delta, p[i]);
                for (std::size_t j : blk.receivers) {
                    if (j == i) continue;
                    std::vector<double> c = p;
                    c[i] -= step;
                    c[j] += step;
                    c = project_masses(set, std::move(c));
                    double v = obj.value(c);
                    if (v > best_val) {
                        best_val = v;
                        best_cand = std::move(c);
                    }
                }
            }
            if (best_cand.empty()) break;
            p = std::move(best_cand);
            out.value = best_val;
        }
    }
    out.argmax = Pmf::from_weights(grid, p);
    return out;
}

SetSolve solve_one_set(const Objective& obj, const AmbiguitySet& set, const GridPtr& grid,
                       const InnerSolverConfig& cfg) {
    if (!nominal_pmf(set).grid()->same_points(*grid))
        throw GridMismatch("inner solver: ambiguity set lives on a different grid than the "
                           "reference pmf");
    if (is_parametric(set)) return solve_parametric(obj, set, grid);
    return solve_by_ascent(obj, set, grid, cfg);
}

} // namespace

InnerResult worst_case_variance(const AllocationVector& n, const std::vector<AmbiguitySet>& sets,
                                const Pmf& ref, const Stratification& strat,
                                const ConditionalMeanTable& means, const InnerSolverConfig& cfg) {
    if (sets.empty()) throw ConfigError("worst_case_variance: no ambiguity sets given");
    Objective obj = make_objective(n, ref, strat, means);

    std::vector<double> per_values(sets.size(), std::numeric_limits<double>::quiet_NaN());
    std::vector<Pmf> per_pmfs;
    per_pmfs.reserve(sets.size());
    std::vector<InnerDiagnostics> per_diag(sets.size());

    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_model = 0;
    std::string first_error;
    bool any_ok = false;
    for (std::size_t m = 0; m < sets.size(); ++m) {
        per_pmfs.push_back(nominal_pmf(sets[m]));
        InnerSolverConfig per_model = cfg;
        per_model.seed = substream_seed(cfg.seed, 0x0DE1, m);
        try {
            SetSolve s = solve_one_set(obj, sets[m], ref.grid(), per_model);
            per_values[m] = s.value;
            per_pmfs[m] = s.argmax;
            per_diag[m] = std::move(s.diag);
            any_ok = true;
            if (s.value > best) {
                best = s.value;
                best_model = m;
            }
        } catch (const Error& e) {
            per_diag[m].failed = true;
            if (first_error.empty()) first_error = e.what();
        }
    }
    if (!any_ok)
        throw InnerSolverFailure("worst_case_variance: all models failed (" + first_error + ")");
    Pmf argmax = per_pmfs[best_model];
    return InnerResult{best,
                       best_model,
                       std::move(argmax),
                       std::move(per_values),
                       std::move(per_pmfs),
                       std::move(per_diag)};
}

std::pair<double, Pmf> maximize_over_set(const AllocationVector& n, const AmbiguitySet& set,
                                         const Pmf& ref, const Stratification& strat,
                                         const ConditionalMeanTable& means,
                                         const InnerSolverConfig& cfg) {
    Objective obj = make_objective(n, ref, strat, means);
    SetSolve s = solve_one_set(obj, set, ref.grid(), cfg);
    return {s.value, std::move(s.argmax)};
}

namespace {

// Enumerate compositions of `resolution` into d cells, evaluating each
// feasible lattice pmf. Depth-first with a running prefix.
void lattice_search(const Objective& obj, const AmbiguitySet& set, const GridPtr& grid,
                    std::vector<double>& p, std::size_t idx, std::size_t remaining,
                    std::size_t resolution, double& best_value, std::vector<double>& best_p) {
    const std::size_t d = p.size();
    if (idx + 1 == d) {
        p[idx] = static_cast<double>(remaining) / static_cast<double>(resolution);
        Pmf cand = Pmf::from_weights(grid, p);
        if (contains(set, cand, 1e-9)) {
            double v = obj.value(cand.mass());
            if (v > best_value) {
                best_value = v;
                best_p = cand.mass();
            }
        }
        p[idx] = 0.0;
        return;
    }
    for (std::size_t c = 0; c <= remaining; ++c) {
        p[idx] = static_cast<double>(c) / static_cast<double>(resolution);
        lattice_search(obj, set, grid, p, idx + 1, remaining - c, resolution, best_value, best_p);
    }
    p[idx] = 0.0;
}

} // namespace

std::pair<double, Pmf> brute_force_inner(const AllocationVector& n, const AmbiguitySet& set,
                                         const Pmf& ref, const Stratification& strat,
                                         const ConditionalMeanTable& means,
                                         std::size_t grid_resolution) {
    Objective obj = make_objective(n, ref, strat, means);
    const Pmf& nominal = nominal_pmf(set);
    if (is_parametric(set)) {
        SetSolve s = solve_parametric(obj, set, ref.grid());
        return {s.value, std::move(s.argmax)};
    }
    const std::size_t d = nominal.size();
    if (d > 6)
        throw GridTooLarge("brute_force_inner: " + std::to_string(d) +
                           "-point grid; the lattice search is capped at 6");

    // The nominal is always a member; it seeds the search so coarse lattices
    // (or gamma smaller than the lattice spacing) still return a valid pair.
    double best_value = obj.value(nominal.mass());
    std::vector<double> best_p = nominal.mass();
    if (grid_resolution >= 1) {
        std::vector<double> p(d, 0.0);
        lattice_search(obj, set, ref.grid(), p, 0, grid_resolution, grid_resolution, best_value,
                       best_p);
    }
    return {best_value, Pmf::from_weights(ref.grid(), std::move(best_p))};
}

std::vector<double> variance_gradient(const AllocationVector& n, const Pmf& eval, const Pmf& ref,
                                      const Stratification& strat,
                                      const ConditionalMeanTable& means) {
    require_same_grid(eval, ref);
    Objective obj = make_objective(n, ref, strat, means);
    std::vector<double> g(eval.size());
    obj.gradient(eval.mass(), g);
    return g;
}

} // namespace drstrat
