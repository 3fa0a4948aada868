#include "drstrat/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace drstrat {

namespace {
constexpr double kRefSupportFloor = 1e-12;
constexpr double kBudgetFloor = 1e-6; // the variance diverges as n_k -> 0
} // namespace

ConditionalMeanTable make_conditional_mean_table(std::vector<double> means) {
    for (std::size_t i = 0; i < means.size(); ++i) {
        if (!(means[i] >= 0.0 && means[i] <= 1.0))
            throw ConfigError("conditional mean at index " + std::to_string(i) +
                              " outside [0, 1]");
    }
    return ConditionalMeanTable{std::move(means)};
}

double AllocationVector::total() const {
    double s = 0.0;
    for (double b : budgets) s += b;
    return s;
}

bool AllocationVector::is_integer(double tol) const {
    for (double b : budgets) {
        if (std::abs(b - std::round(b)) > tol || b < 1.0 - tol) return false;
    }
    return true;
}

AllocationVector make_allocation(std::vector<double> budgets, double n_total) {
    AllocationVector a{std::move(budgets)};
    if (a.budgets.empty()) throw ConfigError("allocation: no strata");
    if (std::abs(a.total() - n_total) > 1e-9)
        throw ConfigError("allocation sums to " + std::to_string(a.total()) +
                          ", expected " + std::to_string(n_total));
    return a;
}

std::size_t SampleBatch::total_draws() const {
    std::size_t n = 0;
    for (const auto& s : strata) n += s.g.size();
    return n;
}

double true_mean(const Pmf& pmf, const ConditionalMeanTable& means) {
    if (pmf.size() != means.size())
        throw GridMismatch("conditional mean table length does not match grid");
    double mu = 0.0;
    for (std::size_t i = 0; i < pmf.size(); ++i) mu += pmf[i] * means[i];
    return mu;
}

double crude_mc_estimate(const std::vector<std::uint8_t>& outputs) {
    if (outputs.empty()) throw EmptyBatch("crude MC estimate over zero samples");
    double s = 0.0;
    for (auto g : outputs) s += static_cast<double>(g);
    return s / static_cast<double>(outputs.size());
}

double stratified_estimate(const SampleBatch& batch, const StrataProbabilities& omega) {
    if (batch.strata.size() != omega.size())
        throw GridMismatch("batch and strata probabilities disagree on K");
    double est = 0.0;
    for (std::size_t k = 0; k < omega.size(); ++k) {
        const auto& s = batch.strata[k];
        if (s.g.empty()) throw EmptyStratum("stratum " + std::to_string(k) + " has no samples");
        double sum = 0.0;
        for (auto g : s.g) sum += static_cast<double>(g);
        est += omega[k] * sum / static_cast<double>(s.g.size());
    }
    return est;
}

AllocationVector neyman_allocation(const StrataProbabilities& omega,
                                   const std::vector<double>& sigma, double n_total) {
    if (sigma.size() != omega.size())
        throw GridMismatch("sigma vector length does not match strata count");
    double denom = 0.0;
    for (std::size_t k = 0; k < omega.size(); ++k) denom += omega[k] * sigma[k];
    if (!(denom > 0.0))
        throw AllZeroProducts("all omega_k * sigma_k products are zero");
    std::vector<double> budgets(omega.size());
    for (std::size_t k = 0; k < omega.size(); ++k)
        budgets[k] = n_total * omega[k] * sigma[k] / denom;
    return AllocationVector{std::move(budgets)};
}

double dr_strat_estimate(const SampleBatch& batch, const Pmf& eval_pmf, const Pmf& ref_pmf,
                         const Stratification& strat) {
    require_same_grid(eval_pmf, ref_pmf);
    if (batch.strata.size() != strat.num_strata())
        throw GridMismatch("batch and stratification disagree on K");
    for (std::size_t i = 0; i < eval_pmf.size(); ++i) {
        if (eval_pmf[i] > 0.0 && ref_pmf[i] < kRefSupportFloor)
            throw SupportViolation("eval pmf places mass on grid index " + std::to_string(i) +
                                   " where the reference has none");
    }
    double est = 0.0;
    for (std::size_t k = 0; k < strat.num_strata(); ++k) {
        const auto& s = batch.strata[k];
        if (s.g.empty()) throw EmptyStratum("stratum " + std::to_string(k) + " has no samples");
        double omega_ref = 0.0;
        for (std::size_t i : strat.stratum(k)) omega_ref += ref_pmf[i];
        double sum = 0.0;
        for (std::size_t j = 0; j < s.g.size(); ++j) {
            if (s.g[j] == 0) continue;
            std::size_t i = s.point_index[j];
            sum += eval_pmf[i] / ref_pmf[i];
        }
        est += omega_ref * sum / static_cast<double>(s.g.size());
    }
    return est;
}

double dr_strat_variance(const AllocationVector& n, const Pmf& eval_pmf, const Pmf& ref_pmf,
                         const Stratification& strat, const ConditionalMeanTable& means) {
    require_same_grid(eval_pmf, ref_pmf);
    if (n.size() != strat.num_strata())
        throw GridMismatch("allocation and stratification disagree on K");
    if (means.size() != eval_pmf.size())
        throw GridMismatch("conditional mean table length does not match grid");
    double var = 0.0;
    for (std::size_t k = 0; k < strat.num_strata(); ++k) {
        if (!(n[k] >= kBudgetFloor))
            throw ZeroBudgetStratum("stratum " + std::to_string(k) +
                                    " budget below variance-evaluation floor");
        double omega_ref = 0.0;
        double quad = 0.0;
        double lin = 0.0;
        for (std::size_t i : strat.stratum(k)) {
            double pe = eval_pmf[i];
            double pr = ref_pmf[i];
            omega_ref += pr;
            if (pe > 0.0) {
                if (pr < kRefSupportFloor)
                    throw SupportViolation("eval pmf places mass on grid index " +
                                           std::to_string(i) + " where the reference has none");
                quad += means[i] * pe * pe / pr;
            }
            lin += means[i] * pe;
        }
        // Cauchy-Schwarz makes the bracket nonnegative; clamp float dust.
        double bracket = std::max(omega_ref * quad - lin * lin, 0.0);
        var += bracket / n[k];
    }
    return var;
}

std::size_t draw_conditional_index(const Pmf& ref_pmf, const Stratification& strat,
                                   std::size_t k, double omega_k, Rng& rng) {
    const auto& idx = strat.stratum(k);
    double target = rng.uniform() * omega_k;
    double acc = 0.0;
    for (std::size_t pos = 0; pos + 1 < idx.size(); ++pos) {
        acc += ref_pmf[idx[pos]];
        if (target < acc) return idx[pos];
    }
    return idx.back();
}

} // namespace drstrat
