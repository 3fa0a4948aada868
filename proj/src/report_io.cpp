#include "drstrat/report_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace drstrat {

namespace {

using nlohmann::json;

json pmf_json(const Pmf& pmf) {
    return json{{"grid", pmf.grid()->points()}, {"mass", pmf.mass()}};
}

json allocation_json(const AllocationVector& n) {
    std::vector<long long> v(n.size());
    for (std::size_t k = 0; k < n.size(); ++k) v[k] = std::llround(n[k]);
    return json(v);
}

} // namespace

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory \"" + dir + "\": " + ec.message());
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write \"" + path + "\"");
    out << content;
}

std::string pmf_to_json(const Pmf& pmf) { return pmf_json(pmf).dump(2) + "\n"; }

void write_solve_report(const std::string& dir, const SolveReport& report,
                        const std::string& name, std::uint64_t seed, double n_total) {
    ensure_dir(dir);

    json witnesses = json::array();
    for (const Pmf& w : report.worst_case_witnesses) witnesses.push_back(pmf_json(w));
    json j{{"name", name},
           {"method", report.method},
           {"seed", seed},
           {"n_total", std::llround(n_total)},
           {"best_allocation", allocation_json(report.best_allocation)},
           {"best_value", report.best_value},
           {"argmax_model", report.argmax_model},
           {"per_model_values", report.per_model_values},
           {"worst_case_witnesses", witnesses},
           {"evaluations", report.trace.size()}};
    write_file(dir + "/report.json", j.dump(2) + "\n");

    std::string alloc = "stratum,n\n";
    for (std::size_t k = 0; k < report.best_allocation.size(); ++k)
        alloc += std::to_string(k + 1) + "," +
                 std::to_string(std::llround(report.best_allocation[k])) + "\n";
    write_file(dir + "/allocation.csv", alloc);

    const std::size_t K = report.best_allocation.size();
    std::string trace = "iteration";
    for (std::size_t k = 1; k <= K; ++k) trace += ",n_" + std::to_string(k);
    trace += ",value,best_so_far,wall_ms\n";
    for (const TraceRow& row : report.trace) {
        trace += std::to_string(row.iteration);
        for (double nk : row.allocation) trace += "," + fmt17(nk);
        trace += "," + fmt17(row.value) + "," + fmt17(row.best_so_far) + "," +
                 fmt17(row.wall_ms) + "\n";
    }
    write_file(dir + "/trace.csv", trace);
}

void write_replication_report(const std::string& dir, const ReplicationResult& result,
                              const std::vector<ReplicationRow>& rows) {
    ensure_dir(dir);
    std::string csv =
        "model,empirical_mean,se_mean,true_mean,z_score,empirical_variance,"
        "analytic_variance,rel_error\n";
    for (const ReplicationRow& r : rows) {
        double z = r.se_mean > 0.0 ? (r.empirical_mean - r.true_mean) / r.se_mean : 0.0;
        double rel = r.analytic_variance > 0.0
                         ? (r.empirical_variance - r.analytic_variance) / r.analytic_variance
                         : 0.0;
        csv += std::to_string(r.model + 1) + "," + fmt17(r.empirical_mean) + "," +
               fmt17(r.se_mean) + "," + fmt17(r.true_mean) + "," + fmt17(z) + "," +
               fmt17(r.empirical_variance) + "," + fmt17(r.analytic_variance) + "," +
               fmt17(rel) + "\n";
    }
    write_file(dir + "/replication.csv", csv);

    json j{{"replications", result.replications},
           {"total_simulator_calls", result.total_simulator_calls}};
    write_file(dir + "/replication_summary.json", j.dump(2) + "\n");
}

void write_variance_table(const std::string& dir, const std::vector<VarianceRow>& rows) {
    ensure_dir(dir);
    std::string csv = "model,nominal_variance,worst_case_variance,witness_file\n";
    double max_nom = 0.0, max_wc = 0.0;
    for (const VarianceRow& r : rows) {
        csv += std::to_string(r.model + 1) + "," + fmt17(r.nominal_variance) + "," +
               fmt17(r.worst_case_variance) + "," + r.witness_file + "\n";
        max_nom = std::max(max_nom, r.nominal_variance);
        max_wc = std::max(max_wc, r.worst_case_variance);
    }
    csv += "max," + fmt17(max_nom) + "," + fmt17(max_wc) + ",\n";
    write_file(dir + "/variance_table.csv", csv);
}

void write_compare_report(const std::string& dir, const SolveReport& dr, const SolveReport& strm,
                          double max_wc_dr, double max_wc_strm,
                          const std::vector<Pmf>& nominals, const std::vector<Pmf>& dr_witnesses,
                          const Grid& grid) {
    ensure_dir(dir);
    double ratio = max_wc_dr > 0.0 ? max_wc_strm / max_wc_dr : 1.0;
    json j{{"ratio_max_worst_case", ratio},
           {"dr_strat",
            {{"allocation", allocation_json(dr.best_allocation)},
             {"max_worst_case", max_wc_dr}}},
           {"str_m",
            {{"allocation", allocation_json(strm.best_allocation)},
             {"max_worst_case", max_wc_strm}}}};
    write_file(dir + "/compare.json", j.dump(2) + "\n");

    std::string bars = "stratum,n_dr_strat,n_str_m\n";
    for (std::size_t k = 0; k < dr.best_allocation.size(); ++k)
        bars += std::to_string(k + 1) + "," +
                std::to_string(std::llround(dr.best_allocation[k])) + "," +
                std::to_string(std::llround(strm.best_allocation[k])) + "\n";
    write_file(dir + "/allocation_bars.csv", bars);

    std::string curves = "x";
    for (std::size_t m = 1; m <= nominals.size(); ++m)
        curves += ",nominal_" + std::to_string(m) + ",worst_" + std::to_string(m);
    curves += "\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
        curves += fmt17(grid[i]);
        for (std::size_t m = 0; m < nominals.size(); ++m) {
            curves += "," + fmt17(nominals[m][i]);
            curves += "," + (m < dr_witnesses.size() ? fmt17(dr_witnesses[m][i]) : "0");
        }
        curves += "\n";
    }
    write_file(dir + "/worst_pmfs.csv", curves);
}

AllocationVector read_allocation_csv(const std::string& path, std::size_t num_strata,
                                     double n_total) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open allocation file \"" + path + "\"");
    std::string line;
    if (!std::getline(in, line) || line.rfind("stratum", 0) != 0)
        throw ConfigError("allocation file \"" + path + "\": expected a \"stratum,n\" header");
    std::vector<double> budgets(num_strata, 0.0);
    std::vector<bool> seen(num_strata, false);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw ConfigError("allocation file \"" + path + "\": malformed row \"" + line + "\"");
        std::size_t k = 0;
        double n = 0.0;
        try {
            k = std::stoul(line.substr(0, comma));
            n = std::stod(line.substr(comma + 1));
        } catch (const std::exception&) {
            throw ConfigError("allocation file \"" + path + "\": malformed row \"" + line + "\"");
        }
        if (k < 1 || k > num_strata)
            throw ConfigError("allocation file \"" + path + "\": stratum " + std::to_string(k) +
                              " outside 1.." + std::to_string(num_strata));
        if (seen[k - 1])
            throw ConfigError("allocation file \"" + path + "\": duplicate stratum " +
                              std::to_string(k));
        seen[k - 1] = true;
        budgets[k - 1] = n;
    }
    for (std::size_t k = 0; k < num_strata; ++k)
        if (!seen[k])
            throw ConfigError("allocation file \"" + path + "\": stratum " +
                              std::to_string(k + 1) + " missing");
    try {
        return make_allocation(std::move(budgets), n_total);
    } catch (const Error& e) {
        throw ConfigError("allocation file \"" + path + "\": " + e.what());
    }
}

void write_manifest(const std::string& dir, const std::string& command,
                    const std::string& config_digest, std::uint64_t seed, int threads,
                    double wall_seconds) {
    ensure_dir(dir);
    json j{{"command", command},
           {"config_digest", config_digest},
           {"seed", seed},
           {"threads", threads},
           {"version", "1.0.0"},
           {"wall_time_s", wall_seconds}};
    write_file(dir + "/manifest.json", j.dump(2) + "\n");
}

} // namespace drstrat
