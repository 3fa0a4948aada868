#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "drstrat/config.hpp"
#include "drstrat/report_io.hpp"

namespace {

using namespace drstrat;
using Clock = std::chrono::steady_clock;

constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

struct Options {
    std::string config_path;
    std::string method = "dr-strat";
    std::string allocation_path;
    std::string out_dir; // empty -> config output_dir + /<command>
    long long replications = 10000;
    long long seed = -1; // -1 -> config value
    int threads = -1;    // -1 -> config value
    bool verbose = false;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot open \"" + path + "\"");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct Loaded {
    Experiment exp;
    std::string digest;
};

Loaded load(const Options& opt) {
    std::string text = slurp(opt.config_path);
    Experiment exp = parse_experiment(text);
    if (opt.seed >= 0) {
        exp.seed = static_cast<std::uint64_t>(opt.seed);
        exp.bo.seed = exp.seed;
        exp.bo.inner.seed = exp.seed;
    }
    if (opt.threads >= 0) {
        exp.threads = opt.threads;
        exp.bo.threads = opt.threads;
        exp.bo.inner.threads = opt.threads;
    }
    return Loaded{std::move(exp), config_digest(text)};
}

std::string out_dir_for(const Options& opt, const Experiment& exp, const std::string& leaf) {
    return opt.out_dir.empty() ? exp.output_dir + "/" + leaf : opt.out_dir;
}

void print_report(const SolveReport& report) {
    std::printf("%s: best value %.6g at allocation [", report.method.c_str(),
                report.best_value);
    for (std::size_t k = 0; k < report.best_allocation.size(); ++k)
        std::printf("%s%lld", k ? ", " : "",
                    static_cast<long long>(std::llround(report.best_allocation[k])));
    std::printf("] (%zu evaluations)\n", report.trace.size());
}

SolveReport run_solve(const Experiment& exp, const std::string& method) {
    if (method == "dr-strat") return solve_dr_strat(exp.problem, exp.sets, exp.bo);
    if (method == "str-m") return solve_str_m(exp.problem, exp.nominals, exp.bo);
    throw ConfigError("unknown --method \"" + method + "\" (dr-strat | str-m)");
}

int cmd_solve(const Options& opt) {
    Loaded loaded = load(opt);
    const Experiment& exp = loaded.exp;
    Clock::time_point t0 = Clock::now();
    SolveReport report = run_solve(exp, opt.method);
    double wall = std::chrono::duration<double>(Clock::now() - t0).count();
    if (opt.verbose) print_report(report);

    std::string dir = out_dir_for(opt, exp, opt.method);
    write_solve_report(dir, report, exp.name, exp.seed, exp.problem.n_total);
    write_manifest(dir, "solve --method " + opt.method, loaded.digest, exp.seed, exp.threads,
                   wall);
    return 0;
}

int cmd_evaluate(const Options& opt) {
    Loaded loaded = load(opt);
    const Experiment& exp = loaded.exp;
    if (opt.allocation_path.empty()) throw ConfigError("evaluate: --allocation is required");
    AllocationVector alloc = read_allocation_csv(
        opt.allocation_path, exp.problem.strat.num_strata(), exp.problem.n_total);

    Clock::time_point t0 = Clock::now();
    InnerSolverConfig inner = inner_config_for(exp.bo);
    std::string dir = out_dir_for(opt, exp, "evaluate");
    ensure_dir(dir);
    std::vector<VarianceRow> rows;
    for (std::size_t m = 0; m < exp.sets.size(); ++m) {
        VarianceRow row;
        row.model = m;
        row.nominal_variance = dr_strat_variance(alloc, exp.nominals[m], exp.problem.reference,
                                                 exp.problem.strat, exp.problem.means);
        auto [wc, witness] = maximize_over_set(alloc, exp.sets[m], exp.problem.reference,
                                               exp.problem.strat, exp.problem.means, inner);
        row.worst_case_variance = wc;
        row.witness_file = "worst_pmf_model_" + std::to_string(m + 1) + ".json";
        write_file(dir + "/" + row.witness_file, pmf_to_json(witness));
        rows.push_back(row);
        if (opt.verbose)
            std::printf("model %zu: nominal %.6g worst-case %.6g\n", m + 1,
                        row.nominal_variance, row.worst_case_variance);
    }
    write_variance_table(dir, rows);
    double wall = std::chrono::duration<double>(Clock::now() - t0).count();
    write_manifest(dir, "evaluate", loaded.digest, exp.seed, exp.threads, wall);
    return 0;
}

int cmd_replicate(const Options& opt) {
    Loaded loaded = load(opt);
    const Experiment& exp = loaded.exp;
    if (opt.allocation_path.empty()) throw ConfigError("replicate: --allocation is required");
    if (opt.replications < 2) throw ConfigError("replicate: --replications must be at least 2");
    AllocationVector alloc = read_allocation_csv(
        opt.allocation_path, exp.problem.strat.num_strata(), exp.problem.n_total);
    if (!alloc.is_integer()) throw ConfigError("replicate: allocation must be integer");

    Clock::time_point t0 = Clock::now();
    auto R = static_cast<std::size_t>(opt.replications);
    ReplicationResult result =
        replicate_experiment(exp.problem, alloc, exp.nominals, R, exp.simulator,
                             substream_seed(exp.seed, 0x4EF), exp.threads);
    std::vector<ReplicationRow> rows;
    for (std::size_t m = 0; m < exp.nominals.size(); ++m) {
        ReplicationRow row;
        row.model = m;
        row.empirical_mean = result.per_model[m].mean;
        row.se_mean = result.per_model[m].se_mean;
        row.true_mean = true_mean(exp.nominals[m], exp.problem.means);
        row.empirical_variance = result.per_model[m].variance;
        row.analytic_variance = dr_strat_variance(alloc, exp.nominals[m], exp.problem.reference,
                                                  exp.problem.strat, exp.problem.means);
        rows.push_back(row);
        if (opt.verbose)
            std::printf("model %zu: mean %.6g (true %.6g), variance %.6g (analytic %.6g)\n",
                        m + 1, row.empirical_mean, row.true_mean, row.empirical_variance,
                        row.analytic_variance);
    }
    std::string dir = out_dir_for(opt, exp, "replicate");
    write_replication_report(dir, result, rows);
    double wall = std::chrono::duration<double>(Clock::now() - t0).count();
    write_manifest(dir, "replicate", loaded.digest, exp.seed, exp.threads, wall);
    return 0;
}

int cmd_compare(const Options& opt) {
    Loaded loaded = load(opt);
    const Experiment& exp = loaded.exp;
    Clock::time_point t0 = Clock::now();

    SolveReport strm = solve_str_m(exp.problem, exp.nominals, exp.bo);
    if (opt.verbose) print_report(strm);
    SolveReport dr = solve_dr_strat(exp.problem, exp.sets, exp.bo);
    if (opt.verbose) print_report(dr);

    InnerSolverConfig inner = inner_config_for(exp.bo);
    double max_wc_strm = worst_case_variance(strm.best_allocation, exp.sets,
                                             exp.problem.reference, exp.problem.strat,
                                             exp.problem.means, inner)
                             .value;
    double max_wc_dr = dr.best_value;
    if (opt.verbose)
        std::printf("ratio max worst-case: %.9g\n",
                    max_wc_dr > 0.0 ? max_wc_strm / max_wc_dr : 1.0);

    std::string dir = out_dir_for(opt, exp, "compare");
    write_solve_report(dir + "/dr-strat", dr, exp.name, exp.seed, exp.problem.n_total);
    write_solve_report(dir + "/str-m", strm, exp.name, exp.seed, exp.problem.n_total);
    write_compare_report(dir, dr, strm, max_wc_dr, max_wc_strm, exp.nominals,
                         dr.worst_case_witnesses, *exp.problem.grid);
    double wall = std::chrono::duration<double>(Clock::now() - t0).count();
    write_manifest(dir, "compare", loaded.digest, exp.seed, exp.threads, wall);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"distributionally robust stratified-sampling budget allocation"};
    app.require_subcommand(1);

    Options opt;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config_path, "experiment config (JSON)")
            ->required();
        sub->add_option("--seed", opt.seed, "override the config seed");
        sub->add_option("--threads", opt.threads,
                        "worker threads (default: config, else DRSTRAT_THREADS, else all cores)");
        sub->add_option("--out", opt.out_dir, "output directory (default: from config)");
        sub->add_flag("--verbose", opt.verbose, "print progress to stdout");
    };

    CLI::App* solve = app.add_subcommand("solve", "compute an allocation");
    add_common(solve);
    solve->add_option("--method", opt.method, "dr-strat (robust) or str-m (nominal benchmark)");

    CLI::App* evaluate =
        app.add_subcommand("evaluate", "variance table for a stored allocation");
    add_common(evaluate);
    evaluate->add_option("--allocation", opt.allocation_path, "allocation.csv path")->required();

    CLI::App* replicate =
        app.add_subcommand("replicate", "Monte Carlo check of a stored allocation");
    add_common(replicate);
    replicate->add_option("--allocation", opt.allocation_path, "allocation.csv path")
        ->required();
    replicate->add_option("--replications", opt.replications, "number of replications");

    CLI::App* compare = app.add_subcommand("compare", "solve both methods and compare");
    add_common(compare);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (solve->parsed()) return cmd_solve(opt);
        if (evaluate->parsed()) return cmd_evaluate(opt);
        if (replicate->parsed()) return cmd_replicate(opt);
        return cmd_compare(opt);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const Error& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitSolver;
    }
}
