#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "drstrat/outer_bo.hpp"
#include "drstrat/rng.hpp"
#include "helpers.hpp"

using namespace drstrat;

namespace {

BOConfig lean_cfg(std::uint64_t seed) {
    BOConfig cfg;
    cfg.n_iterations = 5;
    cfg.acq_restarts = 32;
    cfg.seed = seed;
    cfg.threads = 1;
    cfg.inner.starts = 8;
    return cfg;
}

struct TinyCase {
    Problem pb;
    std::vector<Pmf> nominals;
    std::vector<AmbiguitySet> sets;
};

TinyCase make_tiny_case(double n_total = 24.0) {
    auto sp = testkit::make_small_problem();
    Pmf nom0 = Pmf::from_mass(sp.grid, {0.35, 0.3, 0.2, 0.15});
    Pmf nom1 = Pmf::from_mass(sp.grid, {0.45, 0.3, 0.15, 0.1});
    TinyCase c{make_problem(sp.grid, sp.reference, sp.strat, sp.means, n_total),
               {nom0, nom1},
               {make_l2_set(nom0, 0.08), make_moment_set(nom1, 0.03, 0.9, 1.1)}};
    return c;
}

bool same_alloc(const AllocationVector& a, const AllocationVector& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t k = 0; k < a.size(); ++k)
        if (a[k] != b[k]) return false;
    return true;
}

} // namespace

TEST_CASE("rounding keeps the total and the per-stratum floor") {
    AllocationVector a = round_allocation(AllocationVector{{33.4, 33.3, 33.3}});
    CHECK(a[0] == 34.0);
    CHECK(a[1] == 33.0);
    CHECK(a[2] == 33.0);

    // Floors first, then trim from the smallest fractions.
    AllocationVector b = round_allocation(AllocationVector{{0.2, 0.2, 99.6}});
    CHECK(b[0] == 1.0);
    CHECK(b[1] == 1.0);
    CHECK(b[2] == 98.0);

    AllocationVector c = round_allocation(AllocationVector{{5.0, 7.0, 8.0}});
    CHECK(same_alloc(c, AllocationVector{{5.0, 7.0, 8.0}}));

    Rng rng(31);
    for (int t = 0; t < 200; ++t) {
        std::size_t K = 2 + rng.uniform_index(5);
        double total = static_cast<double>(K + 1 + rng.uniform_index(40));
        std::vector<double> w = rng.dirichlet_uniform(K);
        for (auto& x : w) x *= total;
        AllocationVector r = round_allocation(AllocationVector{w});
        CHECK(r.is_integer());
        CHECK(std::abs(r.total() - std::llround(total)) < 1e-9);
        for (std::size_t k = 0; k < K; ++k) CHECK(r[k] >= 1.0);
    }

    CHECK_THROWS_AS(round_allocation(AllocationVector{{0.5, 0.5, 1.0}}), InfeasibleBudget);
    CHECK_THROWS_AS(round_allocation(AllocationVector{{1.3, 1.3}}), InfeasibleBudget);
}

TEST_CASE("slab projection") {
    std::vector<double> p = project_to_slab({10.0, 0.0}, 10.0, 1.0);
    CHECK(std::abs(p[0] - 9.0) < 1e-12);
    CHECK(std::abs(p[1] - 1.0) < 1e-12);

    std::vector<double> q = project_to_slab({3.0, 7.0}, 10.0, 1.0);
    CHECK(std::abs(q[0] - 3.0) < 1e-12);
    CHECK(std::abs(q[1] - 7.0) < 1e-12);

    Rng rng(5);
    for (int t = 0; t < 100; ++t) {
        std::vector<double> v(4);
        for (auto& x : v) x = 30.0 * rng.uniform() - 5.0;
        std::vector<double> r = project_to_slab(v, 20.0, 1.5);
        double s = 0.0;
        for (double x : r) {
            CHECK(x >= 1.5 - 1e-9);
            s += x;
        }
        CHECK(std::abs(s - 20.0) < 1e-9);
    }
    CHECK_THROWS_AS(project_to_slab({1.0, 1.0}, 1.0, 1.0), InfeasibleBudget);
}

TEST_CASE("acquisition proposals stay on the slab") {
    Rng data_rng(3);
    std::vector<std::vector<double>> X;
    std::vector<double> y;
    for (int i = 0; i < 12; ++i) {
        std::vector<double> w = data_rng.dirichlet_uniform(3);
        y.push_back(std::log(1.0 / (0.1 + w[0]) + 2.0 / (0.1 + w[1]) + 0.5 / (0.1 + w[2])));
        X.push_back(std::move(w));
    }
    GPSurrogate gp = gp_fit(X, y);
    double best = *std::min_element(y.begin(), y.end());
    Rng rng(8);
    for (int t = 0; t < 10; ++t) {
        std::vector<double> n = propose_next(gp, 30.0, 1.0, 64, best, rng, 1);
        REQUIRE(n.size() == 3);
        double s = 0.0;
        for (double x : n) {
            CHECK(x >= 1.0 - 1e-9);
            s += x;
        }
        CHECK(std::abs(s - 30.0) < 1e-9);
    }
}

TEST_CASE("benchmark solve: coherent report on a tiny problem") {
    TinyCase c = make_tiny_case();
    SolveReport rep = solve_str_m(c.pb, c.nominals, lean_cfg(1));

    CHECK(rep.method == "str-m");
    CHECK(rep.best_allocation.is_integer());
    CHECK(std::abs(rep.best_allocation.total() - 24.0) < 1e-9);
    REQUIRE(rep.per_model_values.size() == 2);

    // best_value is the re-evaluated objective at the returned allocation.
    double v = 0.0;
    for (std::size_t m = 0; m < 2; ++m)
        v = std::max(v, dr_strat_variance(rep.best_allocation, c.nominals[m], c.pb.reference,
                                          c.pb.strat, c.pb.means));
    CHECK(rep.best_value == v);
    CHECK(rep.argmax_model ==
          static_cast<std::size_t>(std::max_element(rep.per_model_values.begin(),
                                                    rep.per_model_values.end()) -
                                   rep.per_model_values.begin()));

    // The trace's running best never increases. The returned integer
    // allocation cannot beat it (the trace also saw continuous points).
    for (std::size_t i = 1; i < rep.trace.size(); ++i)
        CHECK(rep.trace[i].best_so_far <= rep.trace[i - 1].best_so_far + 1e-15);
    CHECK(rep.best_value >= rep.trace.back().best_so_far - 1e-12);

    // Never worse than the rounded uniform allocation.
    AllocationVector uniform = round_allocation(
        make_allocation(std::vector<double>(2, 12.0), 24.0));
    double vu = 0.0;
    for (std::size_t m = 0; m < 2; ++m)
        vu = std::max(vu, dr_strat_variance(uniform, c.nominals[m], c.pb.reference, c.pb.strat,
                                            c.pb.means));
    CHECK(rep.best_value <= vu + 1e-15);
}

TEST_CASE("robust solve never loses to the benchmark or the uniform") {
    TinyCase c = make_tiny_case();
    BOConfig cfg = lean_cfg(2);
    SolveReport dr = solve_dr_strat(c.pb, c.sets, cfg);
    SolveReport strm = solve_str_m(c.pb, c.nominals, cfg);

    CHECK(dr.method == "dr-strat");
    CHECK(dr.best_allocation.is_integer());
    REQUIRE(dr.per_model_values.size() == 2);
    REQUIRE(dr.worst_case_witnesses.size() == 2);
    for (std::size_t m = 0; m < 2; ++m)
        CHECK(contains(c.sets[m], dr.worst_case_witnesses[m], 1e-8));

    // Re-evaluating both allocations with the solve's own inner config must
    // reproduce best_value and respect dr <= str-m.
    InnerSolverConfig inner = inner_config_for(cfg);
    InnerResult at_dr = worst_case_variance(dr.best_allocation, c.sets, c.pb.reference,
                                            c.pb.strat, c.pb.means, inner);
    CHECK(at_dr.value == dr.best_value);
    InnerResult at_strm = worst_case_variance(strm.best_allocation, c.sets, c.pb.reference,
                                              c.pb.strat, c.pb.means, inner);
    CHECK(dr.best_value <= at_strm.value + 1e-15);

    AllocationVector uniform = round_allocation(
        make_allocation(std::vector<double>(2, 12.0), 24.0));
    InnerResult at_uniform = worst_case_variance(uniform, c.sets, c.pb.reference, c.pb.strat,
                                                 c.pb.means, inner);
    CHECK(dr.best_value <= at_uniform.value + 1e-15);
}

TEST_CASE("solves are reproducible: same seed, same everything but wall time") {
    TinyCase c = make_tiny_case();
    SolveReport a = solve_dr_strat(c.pb, c.sets, lean_cfg(9));
    SolveReport b = solve_dr_strat(c.pb, c.sets, lean_cfg(9));

    CHECK(same_alloc(a.best_allocation, b.best_allocation));
    CHECK(a.best_value == b.best_value);
    REQUIRE(a.trace.size() == b.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
        CHECK(a.trace[i].value == b.trace[i].value);
        CHECK(a.trace[i].best_so_far == b.trace[i].best_so_far);
        for (std::size_t k = 0; k < a.trace[i].allocation.size(); ++k)
            CHECK(a.trace[i].allocation[k] == b.trace[i].allocation[k]);
    }
    for (std::size_t m = 0; m < a.per_model_values.size(); ++m)
        CHECK(a.per_model_values[m] == b.per_model_values[m]);

    SolveReport d = solve_dr_strat(c.pb, c.sets, lean_cfg(10));
    bool differs = !same_alloc(a.best_allocation, d.best_allocation) ||
                   a.best_value != d.best_value || a.trace.size() != d.trace.size();
    if (!differs) {
        for (std::size_t i = 0; i < a.trace.size() && !differs; ++i)
            differs = a.trace[i].value != d.trace[i].value;
    }
    CHECK(differs); // a different seed explores differently
}

TEST_CASE("thread count does not change the solve") {
    TinyCase c = make_tiny_case();
    BOConfig one = lean_cfg(4);
    BOConfig four = lean_cfg(4);
    four.threads = 4;
    four.inner.threads = 4;
    SolveReport a = solve_dr_strat(c.pb, c.sets, one);
    SolveReport b = solve_dr_strat(c.pb, c.sets, four);
    CHECK(same_alloc(a.best_allocation, b.best_allocation));
    CHECK(a.best_value == b.best_value);
    REQUIRE(a.trace.size() == b.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i)
        CHECK(a.trace[i].value == b.trace[i].value);
}

TEST_CASE("single stratum short-circuits to the whole budget") {
    GridPtr grid = make_grid({0.0, 1.0});
    Pmf ref = Pmf::from_mass(grid, {0.5, 0.5});
    Stratification strat(2, {{0, 1}});
    ConditionalMeanTable means = make_conditional_mean_table({0.2, 0.6});
    Problem pb = make_problem(grid, ref, strat, means, 17.0);
    SolveReport rep = solve_str_m(pb, {ref}, lean_cfg(3));
    REQUIRE(rep.best_allocation.size() == 1);
    CHECK(rep.best_allocation[0] == 17.0);
    CHECK(rep.trace.size() == 1);
}

TEST_CASE("input checks") {
    TinyCase c = make_tiny_case();
    CHECK_THROWS_AS(solve_dr_strat(c.pb, {}, lean_cfg(1)), ConfigError);
    CHECK_THROWS_AS(solve_str_m(c.pb, {}, lean_cfg(1)), ConfigError);
    GridPtr other = make_grid({0.0, 1.0, 2.0, 3.5});
    Pmf onom = Pmf::from_mass(other, {0.3, 0.3, 0.2, 0.2});
    CHECK_THROWS_AS(solve_dr_strat(c.pb, {make_l2_set(onom, 0.1)}, lean_cfg(1)), GridMismatch);
    BOConfig bad = lean_cfg(1);
    bad.floor = 20.0; // 3 strata * 20 > 24
    CHECK_THROWS_AS(solve_str_m(c.pb, c.nominals, bad), InfeasibleBudget);
}
