#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "drstrat/ambiguity.hpp"
#include "drstrat/rng.hpp"

using namespace drstrat;

namespace {

// Independent W1 oracle: repeatedly ship the leftmost remaining supply to the
// leftmost remaining demand (optimal on a line).
double transport_oracle(const Pmf& p, const Pmf& q) {
    std::vector<double> supply = p.mass(), demand = q.mass();
    const Grid& g = *p.grid();
    double cost = 0.0;
    std::size_t i = 0, j = 0;
    while (true) {
        while (i < supply.size() && supply[i] <= 1e-15) ++i;
        while (j < demand.size() && demand[j] <= 1e-15) ++j;
        if (i >= supply.size() || j >= demand.size()) break;
        double moved = std::min(supply[i], demand[j]);
        cost += moved * std::abs(g[i] - g[j]);
        supply[i] -= moved;
        demand[j] -= moved;
    }
    return cost;
}

Pmf random_pmf(const GridPtr& grid, Rng& rng) {
    std::vector<double> w(grid->size());
    for (auto& x : w) x = 0.01 + rng.uniform();
    return Pmf::from_weights(grid, w);
}

} // namespace

TEST_CASE("l2 distance") {
    GridPtr g = make_grid({0.0, 1.0});
    Pmf a = Pmf::from_mass(g, {0.7, 0.3});
    Pmf b = Pmf::from_mass(g, {0.5, 0.5});
    CHECK(std::abs(l2_distance(a, b) - std::sqrt(0.08)) < 1e-15);
    CHECK(l2_distance(a, a) == 0.0);
}

TEST_CASE("wasserstein1: hand values and metric axioms") {
    GridPtr g = make_grid({0.0, 1.0, 3.0});
    Pmf left = Pmf::from_mass(g, {1.0, 0.0, 0.0});
    Pmf right = Pmf::from_mass(g, {0.0, 0.0, 1.0});
    Pmf mid = Pmf::from_mass(g, {0.0, 1.0, 0.0});
    CHECK(std::abs(wasserstein1_distance_1d(left, right) - 3.0) < 1e-15);
    CHECK(std::abs(wasserstein1_distance_1d(left, mid) - 1.0) < 1e-15);
    CHECK(wasserstein1_distance_1d(mid, mid) == 0.0);
    // symmetry + triangle through mid
    CHECK(std::abs(wasserstein1_distance_1d(right, left) - 3.0) < 1e-15);
    CHECK(wasserstein1_distance_1d(left, right) <=
          wasserstein1_distance_1d(left, mid) + wasserstein1_distance_1d(mid, right) + 1e-15);

    // Split mass: move 0.3 from x=0 to x=1 -> cost 0.3.
    Pmf m1 = Pmf::from_mass(g, {0.5, 0.2, 0.3});
    Pmf m2 = Pmf::from_mass(g, {0.2, 0.5, 0.3});
    CHECK(std::abs(wasserstein1_distance_1d(m1, m2) - 0.3) < 1e-15);
}

TEST_CASE("cumulative formula, monotone coupling, and oracle all agree") {
    Rng rng(99);
    GridPtr g = make_grid({0.0, 0.7, 1.1, 2.5, 4.0});
    for (int t = 0; t < 200; ++t) {
        Pmf p = random_pmf(g, rng);
        Pmf q = random_pmf(g, rng);
        double cdf = wasserstein1_distance_1d(p, q);
        double plan = wasserstein_transport_distance(p, q, 1.0);
        double oracle = transport_oracle(p, q);
        CHECK(std::abs(cdf - oracle) < 1e-9);
        CHECK(std::abs(plan - oracle) < 1e-9);
    }
    CHECK_THROWS_AS(wasserstein_transport_distance(random_pmf(g, rng), random_pmf(g, rng), 0.5),
                    ConfigError);
}

TEST_CASE("set construction rules") {
    GridPtr g = make_grid({1.0, 2.0, 3.0, 4.0});
    Pmf nom = Pmf::from_mass(g, {0.4, 0.3, 0.2, 0.1});

    CHECK_NOTHROW(make_l2_set(nom, 0.0));
    CHECK_THROWS_AS(make_l2_set(nom, -0.1), ConfigError);
    CHECK_THROWS_AS(make_wass1_set(nom, -1.0), ConfigError);
    CHECK_THROWS_AS(make_moment_set(nom, 0.1, 1.2, 1.5), ConfigError); // lb > 1
    CHECK_THROWS_AS(make_moment_set(nom, 0.1, 0.9, 0.95), ConfigError); // ub < 1
    CHECK_THROWS_AS(make_binomial_family_set(nom, 0.0, 1.0, {}), ConfigError);
    // Theta grids are validated up front by generating every member.
    CHECK_THROWS_AS(make_rayleigh_shift_set(nom, {{1.0, 2.0}}), NonPositiveDensityArgument);
    GridPtr frac = make_grid({0.5, 1.0});
    Pmf fnom = Pmf::from_mass(frac, {0.5, 0.5});
    CHECK_THROWS_AS(make_binomial_family_set(fnom, 0.0, 1.0, {{3, 0.5}}), NonIntegerPreimage);
}

TEST_CASE("nominal pmf access, parametric flag, enumeration") {
    GridPtr g = make_affine_integer_grid(0, 5, 0.0, 1.0);
    Pmf nom = scaled_binomial_pmf(g, 5, 0.5, 0.0, 1.0);
    AmbiguitySet ball = make_l2_set(nom, 0.1);
    AmbiguitySet fam = make_binomial_family_set(nom, 0.0, 1.0, {{5, 0.4}, {5, 0.5}, {4, 0.5}});

    CHECK(!is_parametric(ball));
    CHECK(is_parametric(fam));
    CHECK(l2_distance(nominal_pmf(ball), nom) == 0.0);
    auto members = enumerate_parametric_members(fam);
    REQUIRE(members.size() == 3);
    CHECK(l2_distance(members[1], nom) == 0.0);
    CHECK_THROWS_AS(enumerate_parametric_members(ball), ConfigError);
}

TEST_CASE("membership: balls, moments, parametric") {
    GridPtr g = make_grid({0.0, 1.0, 2.0, 3.0});
    Pmf nom = Pmf::from_mass(g, {0.4, 0.3, 0.2, 0.1});
    Pmf near = Pmf::from_mass(g, {0.41, 0.29, 0.2, 0.1});
    Pmf far = Pmf::from_mass(g, {0.1, 0.2, 0.3, 0.4});

    AmbiguitySet l2 = make_l2_set(nom, 0.05);
    CHECK(contains(l2, nom, 1e-12));
    CHECK(contains(l2, near, 1e-12)); // distance ~0.014
    CHECK(!contains(l2, far, 1e-12));

    AmbiguitySet w1 = make_wass1_set(nom, 0.05);
    CHECK(contains(w1, nom, 1e-12));
    CHECK(!contains(w1, far, 1e-12));

    AmbiguitySet mom = make_moment_set(nom, 0.01, 0.9, 1.1);
    CHECK(contains(mom, nom, 1e-12));
    CHECK(!contains(mom, far, 1e-12)); // mean moves by 1.0

    // Degenerate moment set: exactly the nominal's first two moments.
    AmbiguitySet tight = make_moment_set(nom, 0.0, 1.0, 1.0);
    CHECK(contains(tight, nom, 1e-12));

    AmbiguitySet fam = make_binomial_family_set(
        Pmf::from_mass(make_affine_integer_grid(0, 5, 0.0, 1.0), {0.1, 0.2, 0.3, 0.2, 0.1, 0.1}),
        0.0, 1.0, {{5, 0.4}, {5, 0.6}});
    for (const Pmf& m : enumerate_parametric_members(fam)) CHECK(contains(fam, m, 1e-9));
    CHECK(!contains(fam, nominal_pmf(fam), 1e-9)); // the nominal is off-grid here
}

TEST_CASE("simplex projection") {
    auto check_simplex = [](const std::vector<double>& v) {
        double s = std::accumulate(v.begin(), v.end(), 0.0);
        CHECK(std::abs(s - 1.0) < 1e-12);
        for (double x : v) CHECK(x >= 0.0);
    };

    std::vector<double> a = project_to_simplex({1.2, -0.2});
    check_simplex(a);
    CHECK(std::abs(a[0] - 1.0) < 1e-12);
    CHECK(a[1] == 0.0);

    std::vector<double> b = project_to_simplex({0.3, 0.3, 0.3});
    check_simplex(b);
    for (double x : b) CHECK(std::abs(x - 1.0 / 3.0) < 1e-12);

    // Already feasible: fixed point.
    std::vector<double> c = project_to_simplex({0.2, 0.5, 0.3});
    CHECK(std::abs(c[0] - 0.2) < 1e-12);
    CHECK(std::abs(c[1] - 0.5) < 1e-12);

    Rng rng(3);
    for (int t = 0; t < 100; ++t) {
        std::vector<double> v(5);
        for (auto& x : v) x = 4.0 * rng.uniform() - 2.0;
        std::vector<double> p = project_to_simplex(v);
        check_simplex(p);
        std::vector<double> pp = project_to_simplex(p);
        for (std::size_t i = 0; i < 5; ++i) CHECK(std::abs(p[i] - pp[i]) < 1e-12);
    }
}

TEST_CASE("l2 projection: interior radial case has a closed form") {
    GridPtr g = make_grid({0.0, 1.0, 2.0, 3.0});
    Pmf nom = Pmf::from_mass(g, {0.25, 0.25, 0.25, 0.25});
    Pmf p = Pmf::from_mass(g, {0.4, 0.3, 0.2, 0.1});
    double gamma = 0.1;
    AmbiguitySet set = make_l2_set(nom, gamma);

    Pmf proj = project(set, p);
    CHECK(contains(set, proj, 1e-9));
    double d = l2_distance(p, nom);
    // All coordinates stay positive, so the projection is the radial pull.
    for (std::size_t i = 0; i < 4; ++i) {
        double radial = 0.25 + gamma / d * (p[i] - 0.25);
        CHECK(std::abs(proj[i] - radial) < 1e-6);
    }
    CHECK(std::abs(l2_distance(proj, nom) - gamma) < 1e-9);
}

TEST_CASE("projections land inside and fix members") {
    Rng rng(17);
    GridPtr g = make_grid({0.0, 0.5, 1.5, 2.0, 4.0});
    Pmf nom = Pmf::from_weights(g, {5.0, 4.0, 3.0, 2.0, 1.0});
    std::vector<AmbiguitySet> sets{make_l2_set(nom, 0.08), make_wass1_set(nom, 0.1),
                                   make_moment_set(nom, 0.02, 0.9, 1.1)};
    for (const AmbiguitySet& set : sets) {
        for (int t = 0; t < 50; ++t) {
            Pmf p = random_pmf(g, rng);
            Pmf proj = project(set, p);
            CHECK(contains(set, proj, 1e-9));
            // Members are fixed points.
            Pmf again = project(set, proj);
            for (std::size_t i = 0; i < proj.size(); ++i)
                CHECK(std::abs(again[i] - proj[i]) < 1e-9);
        }
        // The nominal projects to itself.
        Pmf self = project(set, nom);
        for (std::size_t i = 0; i < nom.size(); ++i) CHECK(std::abs(self[i] - nom[i]) < 1e-12);
    }
    AmbiguitySet fam = make_rayleigh_shift_set(
        discretized_rayleigh_pmf(g, 1.0, -1.0), {{1.0, -1.0}, {1.5, -1.0}});
    CHECK_THROWS_AS(project(fam, nom), ConfigError);
}

TEST_CASE("wasserstein projection lands exactly on the boundary") {
    GridPtr g = make_grid({0.0, 1.0, 2.0, 3.0});
    Pmf nom = Pmf::from_mass(g, {0.7, 0.1, 0.1, 0.1});
    Pmf p = Pmf::from_mass(g, {0.1, 0.1, 0.1, 0.7});
    AmbiguitySet set = make_wass1_set(nom, 0.2);
    Pmf proj = project(set, p);
    CHECK(contains(set, proj, 1e-9));
    CHECK(std::abs(wasserstein1_distance_1d(proj, nom) - 0.2) < 1e-9);
}

TEST_CASE("moment projection respects every constraint") {
    GridPtr g = make_grid({0.0, 1.0, 2.0, 3.0, 4.0});
    Pmf nom = Pmf::from_weights(g, {1.0, 2.0, 3.0, 2.0, 1.0});
    AmbiguitySet set = make_moment_set(nom, 0.05, 0.8, 1.2);
    const auto& ms = std::get<MomentSet>(set);
    Rng rng(41);
    for (int t = 0; t < 100; ++t) {
        Pmf p = random_pmf(g, rng);
        Pmf proj = project(set, p);
        CHECK(contains(set, proj, 1e-9));
        double dm = proj.mean() - ms.mu_bar;
        double v = proj.second_central_moment(ms.mu_bar);
        CHECK(dm * dm <= ms.gamma1 * ms.sigma_bar + 1e-9);
        CHECK(v <= ms.gamma2_ub * ms.sigma_bar + 1e-9);
        CHECK(v >= ms.gamma2_lb * ms.sigma_bar + 2.0 * dm * dm - 1e-9);
    }
}

TEST_CASE("sampled members belong to their set and are seed-reproducible") {
    GridPtr g = make_grid({0.0, 1.0, 2.0, 3.0, 4.0});
    Pmf nom = Pmf::from_weights(g, {1.0, 2.0, 3.0, 2.0, 1.0});
    GridPtr ig = make_affine_integer_grid(0, 4, 0.0, 1.0);
    Pmf inom = scaled_binomial_pmf(ig, 4, 0.5, 0.0, 1.0);
    std::vector<AmbiguitySet> sets{
        make_l2_set(nom, 0.1), make_wass1_set(nom, 0.15), make_moment_set(nom, 0.05, 0.9, 1.1),
        make_binomial_family_set(inom, 0.0, 1.0, {{4, 0.4}, {4, 0.5}, {4, 0.6}}),
        make_rayleigh_shift_set(discretized_rayleigh_pmf(g, 1.0, -1.0),
                                {{1.0, -1.0}, {1.5, -2.0}})};
    for (const AmbiguitySet& set : sets) {
        for (std::uint64_t s = 0; s < 25; ++s) {
            Pmf m = sample_member(set, s);
            CHECK(contains(set, m, 1e-9));
            Pmf m2 = sample_member(set, s);
            for (std::size_t i = 0; i < m.size(); ++i) CHECK(m[i] == m2[i]);
        }
    }
    // gamma = 0 collapses the ball to the nominal.
    AmbiguitySet point = make_l2_set(nom, 0.0);
    Pmf m = sample_member(point, 5);
    CHECK(l2_distance(m, nom) < 1e-9);
}
