// Times the OpenMP-parallel kernels against their serial reference paths on
// the bundled toy setup and checks the results match bit for bit.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "drstrat/inner_solver.hpp"
#include "drstrat/outer_bo.hpp"
#include "drstrat/parallel.hpp"
#include "drstrat/sim_harness.hpp"

using namespace drstrat;
using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct Toy {
    Problem problem;
    std::vector<Pmf> nominals;
    Simulator sim;
};

Toy make_toy() {
    double scale = std::sqrt(20.0);
    GridPtr grid = make_affine_integer_grid(23, 57, 40.0, scale);
    Pmf p1 = scaled_binomial_pmf(grid, 75, 0.55, 40.0, scale);
    Pmf p2 = scaled_binomial_pmf(grid, 85, 0.45, 40.0, scale);
    Pmf ref = reference_from_nominals({p1, p2});
    Stratification strat = Stratification::equal_contiguous(grid->size(), 7);
    Simulator sim(ToyNormal{5.2}, grid);
    Problem pb = make_problem(grid, ref, strat, sim.exact_means(), 100.0);
    return Toy{std::move(pb), {p1, p2}, std::move(sim)};
}

} // namespace

int main() {
    Toy toy = make_toy();
    int threads = resolve_threads(0);
    std::printf("worker threads: %d\n\n", threads);
    std::printf("%-28s %12s %12s %9s %10s\n", "task", "serial_ms", "parallel_ms", "speedup",
                "identical");

    // Replication harness: R rounds of N_T=100 draws, two eval pmfs each.
    {
        const std::size_t R = 20000;
        AllocationVector alloc = round_allocation(
            make_allocation(std::vector<double>(7, 100.0 / 7.0), 100.0));
        Clock::time_point t0 = Clock::now();
        ReplicationResult serial =
            replicate_experiment_serial(toy.problem, alloc, toy.nominals, R, toy.sim, 7);
        double t_serial = ms_since(t0);
        t0 = Clock::now();
        ReplicationResult parallel =
            replicate_experiment(toy.problem, alloc, toy.nominals, R, toy.sim, 7, threads);
        double t_parallel = ms_since(t0);
        bool same = serial.per_model.size() == parallel.per_model.size();
        for (std::size_t m = 0; same && m < serial.per_model.size(); ++m)
            same = serial.per_model[m].mean == parallel.per_model[m].mean &&
                   serial.per_model[m].variance == parallel.per_model[m].variance;
        std::printf("%-28s %12.1f %12.1f %8.2fx %10s\n", "replicate (R=20000)", t_serial,
                    t_parallel, t_serial / t_parallel, same ? "yes" : "NO");
    }

    // Multistart inner ascent on an L2 ball.
    {
        AllocationVector alloc = make_allocation({15, 14, 14, 14, 15, 14, 14}, 100.0);
        std::vector<AmbiguitySet> sets{make_l2_set(toy.nominals[0], 0.05),
                                       make_l2_set(toy.nominals[1], 0.05)};
        InnerSolverConfig cfg;
        cfg.starts = 64;
        cfg.seed = 7;
        cfg.threads = 1;
        Clock::time_point t0 = Clock::now();
        InnerResult serial = worst_case_variance(alloc, sets, toy.problem.reference,
                                                 toy.problem.strat, toy.problem.means, cfg);
        double t_serial = ms_since(t0);
        cfg.threads = threads;
        t0 = Clock::now();
        InnerResult parallel = worst_case_variance(alloc, sets, toy.problem.reference,
                                                   toy.problem.strat, toy.problem.means, cfg);
        double t_parallel = ms_since(t0);
        bool same = serial.value == parallel.value &&
                    serial.argmax_model == parallel.argmax_model;
        std::printf("%-28s %12.1f %12.1f %8.2fx %10s\n", "inner ascent (64 starts)", t_serial,
                    t_parallel, t_serial / t_parallel, same ? "yes" : "NO");
    }

    return 0;
}
