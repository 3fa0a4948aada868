#include "drstrat/sim_harness.hpp"

#include <cmath>
#include <string>

#include <omp.h>

#include "drstrat/parallel.hpp"

namespace drstrat {

double toy_mu_y(double x) {
    return 0.95 * x * x * (1.0 + 0.5 * std::cos(10.0 * x) + 0.5 * std::cos(20.0 * x));
}

double toy_sigma_y(double x) {
    return 1.0 + 0.7 * std::abs(x) + 0.4 * std::cos(x) + 0.3 * std::cos(14.0 * x);
}

double toy_conditional_mean(double x, double threshold) {
    double sigma = toy_sigma_y(x);
    double z = (threshold - toy_mu_y(x)) / sigma;
    return 0.5 * std::erfc(z / std::sqrt(2.0));
}

Simulator::Simulator(SimulatorSpec spec, GridPtr grid) : grid_(std::move(grid)) {
    if (!grid_) throw ConfigError("simulator: null grid");
    const std::size_t n = grid_->size();
    exact_.resize(n);
    if (const auto* toy = std::get_if<ToyNormal>(&spec)) {
        table_ = false;
        threshold_ = toy->threshold;
        mu_.resize(n);
        sigma_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            double x = (*grid_)[i];
            mu_[i] = toy_mu_y(x);
            sigma_[i] = toy_sigma_y(x);
            if (!(sigma_[i] > 0.0))
                throw ConfigError("simulator: output sd is not positive at x = " +
                                  std::to_string(x));
            exact_[i] = toy_conditional_mean(x, threshold_);
        }
    } else {
        table_ = true;
        const auto& tb = std::get<TableBernoulli>(spec);
        if (tb.means.size() != n)
            throw GridMismatch("simulator: mean table covers " +
                               std::to_string(tb.means.size()) + " points, grid has " +
                               std::to_string(n));
        exact_ = tb.means.means;
        for (double m : exact_)
            if (m < 0.0 || m > 1.0)
                throw ConfigError("simulator: table mean outside [0, 1]");
    }
}

std::uint8_t Simulator::draw(std::size_t index, Rng& rng) const {
    if (table_) return rng.uniform() < exact_[index] ? 1 : 0;
    double y = mu_[index] + sigma_[index] * rng.normal();
    return y > threshold_ ? 1 : 0;
}

std::uint8_t simulate_output(const Simulator& sim, double x, Rng& rng) {
    const Grid& grid = *sim.grid();
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (std::abs(grid[i] - x) <= 1e-9) return sim.draw(i, rng);
    throw ConfigError("simulate_output: x = " + std::to_string(x) + " is not on the grid");
}

ConditionalMeanTable pilot_estimate_cond_means(const Simulator& sim,
                                               std::size_t pilot_per_point,
                                               std::uint64_t seed) {
    if (pilot_per_point < 1) throw ConfigError("pilot: need at least one draw per point");
    const std::size_t n = sim.grid()->size();
    std::vector<double> means(n);
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(substream_seed(seed, 0x9170, i));
        std::size_t hits = 0;
        for (std::size_t r = 0; r < pilot_per_point; ++r) hits += sim.draw(i, rng);
        means[i] = static_cast<double>(hits) / static_cast<double>(pilot_per_point);
    }
    return make_conditional_mean_table(std::move(means));
}

SampleBatch draw_batch(const Problem& pb, const AllocationVector& allocation,
                       const Simulator& sim, Rng& rng) {
    if (!allocation.is_integer())
        throw ConfigError("draw_batch: allocation must be integer");
    if (allocation.size() != pb.strat.num_strata())
        throw GridMismatch("draw_batch: allocation size does not match the strata");
    StrataProbabilities omega = strata_probabilities(pb.reference, pb.strat);
    SampleBatch batch;
    batch.strata.resize(allocation.size());
    for (std::size_t k = 0; k < allocation.size(); ++k) {
        auto n_k = static_cast<std::size_t>(std::llround(allocation[k]));
        StratumSamples& s = batch.strata[k];
        s.point_index.reserve(n_k);
        s.g.reserve(n_k);
        for (std::size_t j = 0; j < n_k; ++j) {
            std::size_t idx = draw_conditional_index(pb.reference, pb.strat, k, omega[k], rng);
            s.point_index.push_back(idx);
            s.g.push_back(sim.draw(idx, rng));
        }
    }
    return batch;
}

namespace {

ReplicationResult replicate_impl(const Problem& pb, const AllocationVector& allocation,
                                 const std::vector<Pmf>& eval_pmfs, std::size_t R,
                                 const Simulator& sim, std::uint64_t seed, int threads) {
    if (R < 2) throw ConfigError("replicate: need at least 2 replications");
    if (eval_pmfs.empty()) throw ConfigError("replicate: no evaluation pmfs");
    for (const Pmf& p : eval_pmfs) require_same_grid(p, pb.reference);

    const std::size_t M = eval_pmfs.size();
    // Per-replication estimates, merged serially afterwards so the result is
    // the same for any worker count.
    std::vector<double> slots(R * M);
    std::vector<std::size_t> calls(R);

    auto run_one = [&](std::size_t r) {
        Rng rng(substream_seed(seed, 0x4E9, r));
        SampleBatch batch = draw_batch(pb, allocation, sim, rng);
        calls[r] = batch.total_draws();
        for (std::size_t m = 0; m < M; ++m)
            slots[r * M + m] = dr_strat_estimate(batch, eval_pmfs[m], pb.reference, pb.strat);
    };

    if (threads <= 1) {
        for (std::size_t r = 0; r < R; ++r) run_one(r);
    } else {
#pragma omp parallel for num_threads(threads) schedule(static)
        for (long long r = 0; r < static_cast<long long>(R); ++r)
            run_one(static_cast<std::size_t>(r));
    }

    ReplicationResult result;
    result.replications = R;
    result.per_model.resize(M);
    for (std::size_t r = 0; r < R; ++r) result.total_simulator_calls += calls[r];
    for (std::size_t m = 0; m < M; ++m) {
        double sum = 0.0;
        for (std::size_t r = 0; r < R; ++r) sum += slots[r * M + m];
        double mean = sum / static_cast<double>(R);
        double ss = 0.0;
        for (std::size_t r = 0; r < R; ++r) {
            double d = slots[r * M + m] - mean;
            ss += d * d;
        }
        double var = ss / static_cast<double>(R - 1);
        result.per_model[m] = {mean, var, std::sqrt(var / static_cast<double>(R))};
    }
    return result;
}

} // namespace

ReplicationResult replicate_experiment(const Problem& pb, const AllocationVector& allocation,
                                       const std::vector<Pmf>& eval_pmfs, std::size_t R,
                                       const Simulator& sim, std::uint64_t seed, int threads) {
    return replicate_impl(pb, allocation, eval_pmfs, R, sim, seed, resolve_threads(threads));
}

ReplicationResult replicate_experiment_serial(const Problem& pb,
                                              const AllocationVector& allocation,
                                              const std::vector<Pmf>& eval_pmfs, std::size_t R,
                                              const Simulator& sim, std::uint64_t seed) {
    return replicate_impl(pb, allocation, eval_pmfs, R, sim, seed, 1);
}

} // namespace drstrat
