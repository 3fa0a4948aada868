#pragma once

#include <string>
#include <vector>

#include "drstrat/outer_bo.hpp"
#include "drstrat/sim_harness.hpp"

namespace drstrat {

// Shortest-exact formatting used in every CSV ("%.17g" round-trips doubles).
std::string fmt17(double x);

void ensure_dir(const std::string& dir);
void write_file(const std::string& path, const std::string& content);

std::string pmf_to_json(const Pmf& pmf);

// report.json + allocation.csv + trace.csv. Everything except the trace's
// wall-ms column is a pure function of config + seed.
void write_solve_report(const std::string& dir, const SolveReport& report,
                        const std::string& name, std::uint64_t seed, double n_total);

struct ReplicationRow {
    std::size_t model = 0;
    double empirical_mean = 0.0;
    double se_mean = 0.0;
    double true_mean = 0.0;
    double empirical_variance = 0.0;
    double analytic_variance = 0.0;
};
void write_replication_report(const std::string& dir, const ReplicationResult& result,
                              const std::vector<ReplicationRow>& rows);

struct VarianceRow {
    std::size_t model = 0;
    double nominal_variance = 0.0;
    double worst_case_variance = 0.0;
    std::string witness_file;
};
void write_variance_table(const std::string& dir, const std::vector<VarianceRow>& rows);

void write_compare_report(const std::string& dir, const SolveReport& dr, const SolveReport& strm,
                          double max_wc_dr, double max_wc_strm,
                          const std::vector<Pmf>& nominals, const std::vector<Pmf>& dr_witnesses,
                          const Grid& grid);

void write_manifest(const std::string& dir, const std::string& command,
                    const std::string& config_digest, std::uint64_t seed, int threads,
                    double wall_seconds);

// Reads the "stratum,n" CSV produced by write_solve_report; every stratum
// 1..K must appear exactly once and the budgets must sum to n_total.
AllocationVector read_allocation_csv(const std::string& path, std::size_t num_strata,
                                     double n_total);

} // namespace drstrat
