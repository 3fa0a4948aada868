#include "drstrat/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace drstrat {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw ConfigError("config: " + msg); }

const json& need(const json& j, const std::string& key, const std::string& ctx) {
    auto it = j.find(key);
    if (it == j.end()) fail(ctx + ": missing \"" + key + "\"");
    return *it;
}

double num_at(const json& j, const std::string& key, const std::string& ctx) {
    const json& v = need(j, key, ctx);
    if (!v.is_number()) fail(ctx + ": \"" + key + "\" must be a number");
    return v.get<double>();
}

double num_or(const json& j, const std::string& key, double dflt, const std::string& ctx) {
    auto it = j.find(key);
    if (it == j.end()) return dflt;
    if (!it->is_number()) fail(ctx + ": \"" + key + "\" must be a number");
    return it->get<double>();
}

long long int_at(const json& j, const std::string& key, const std::string& ctx) {
    double v = num_at(j, key, ctx);
    if (std::abs(v - std::llround(v)) > 1e-9) fail(ctx + ": \"" + key + "\" must be an integer");
    return std::llround(v);
}

std::string str_at(const json& j, const std::string& key, const std::string& ctx) {
    const json& v = need(j, key, ctx);
    if (!v.is_string()) fail(ctx + ": \"" + key + "\" must be a string");
    return v.get<std::string>();
}

std::vector<double> num_array(const json& v, const std::string& ctx) {
    if (!v.is_array()) fail(ctx + ": expected an array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (const json& e : v) {
        if (!e.is_number()) fail(ctx + ": expected an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

// "scale" directly, or "scale_squared" when the scale itself is irrational
// (the presets use sqrt(20)).
double scale_from(const json& j, const std::string& ctx) {
    if (j.contains("scale_squared")) {
        double s2 = num_at(j, "scale_squared", ctx);
        if (!(s2 > 0.0)) fail(ctx + ": \"scale_squared\" must be positive");
        return std::sqrt(s2);
    }
    double s = num_at(j, "scale", ctx);
    if (!(s > 0.0)) fail(ctx + ": \"scale\" must be positive");
    return s;
}

GridPtr parse_grid(const json& j) {
    const std::string ctx = "grid";
    std::string type = str_at(j, "type", ctx);
    if (type == "affine_integer") {
        return make_affine_integer_grid(int_at(j, "i_min", ctx), int_at(j, "i_max", ctx),
                                        num_at(j, "shift", ctx), scale_from(j, ctx));
    }
    if (type == "linspace") {
        long long count = int_at(j, "count", ctx);
        if (count < 2) fail(ctx + ": \"count\" must be at least 2");
        return make_linspace_grid(num_at(j, "start", ctx), num_at(j, "step", ctx),
                                  static_cast<std::size_t>(count));
    }
    if (type == "explicit") return make_grid(num_array(need(j, "points", ctx), ctx + ".points"));
    fail(ctx + ": unknown type \"" + type + "\"");
}

// sigma, or mean wind speed with sigma = mean * sqrt(2/pi).
double rayleigh_sigma(const json& j, const std::string& ctx) {
    if (j.contains("mean")) {
        double mean = num_at(j, "mean", ctx);
        if (!(mean > 0.0)) fail(ctx + ": \"mean\" must be positive");
        return mean * std::sqrt(2.0 / M_PI);
    }
    double s = num_at(j, "sigma", ctx);
    if (!(s > 0.0)) fail(ctx + ": \"sigma\" must be positive");
    return s;
}

Pmf parse_pmf(const json& j, const GridPtr& grid, const std::string& ctx) {
    std::string type = str_at(j, "type", ctx);
    if (type == "scaled_binomial")
        return scaled_binomial_pmf(grid, int_at(j, "n_trials", ctx), num_at(j, "p", ctx),
                                   num_at(j, "shift", ctx), scale_from(j, ctx));
    if (type == "rayleigh")
        return discretized_rayleigh_pmf(grid, rayleigh_sigma(j, ctx), num_at(j, "delta", ctx));
    if (type == "explicit")
        return Pmf::from_mass(grid, num_array(need(j, "mass", ctx), ctx + ".mass"));
    fail(ctx + ": unknown pmf type \"" + type + "\"");
}

AmbiguitySet parse_set(const json& j, const Pmf& nominal, const std::string& ctx) {
    std::string type = str_at(j, "type", ctx);
    if (type == "l2") return make_l2_set(nominal, num_at(j, "gamma", ctx));
    if (type == "wasserstein1") return make_wass1_set(nominal, num_at(j, "gamma", ctx));
    if (type == "moment")
        return make_moment_set(nominal, num_at(j, "gamma1", ctx), num_at(j, "gamma2_lb", ctx),
                               num_at(j, "gamma2_ub", ctx));
    if (type == "binomial") {
        const json& tj = need(j, "thetas", ctx);
        if (!tj.is_array() || tj.empty()) fail(ctx + ": \"thetas\" must be a nonempty array");
        std::vector<std::pair<long long, double>> thetas;
        for (const json& t : tj) {
            if (!t.is_array() || t.size() != 2)
                fail(ctx + ": binomial theta entries are [n_trials, p] pairs");
            double n = t[0].get<double>();
            if (std::abs(n - std::llround(n)) > 1e-9)
                fail(ctx + ": binomial n_trials must be integer");
            thetas.emplace_back(std::llround(n), t[1].get<double>());
        }
        return make_binomial_family_set(nominal, num_at(j, "shift", ctx), scale_from(j, ctx),
                                        std::move(thetas));
    }
    if (type == "rayleigh") {
        const json& tj = need(j, "thetas", ctx);
        if (!tj.is_array() || tj.empty()) fail(ctx + ": \"thetas\" must be a nonempty array");
        std::vector<std::pair<double, double>> thetas;
        for (const json& t : tj) {
            if (t.is_array() && t.size() == 2) {
                thetas.emplace_back(t[0].get<double>(), t[1].get<double>());
            } else if (t.is_object()) {
                thetas.emplace_back(rayleigh_sigma(t, ctx + ".thetas"),
                                    num_at(t, "delta", ctx + ".thetas"));
            } else {
                fail(ctx + ": rayleigh theta entries are [sigma, delta] pairs or "
                           "{mean|sigma, delta} objects");
            }
        }
        return make_rayleigh_shift_set(nominal, std::move(thetas));
    }
    fail(ctx + ": unknown ambiguity type \"" + type + "\"");
}

Stratification parse_strata(const json& j, std::size_t grid_size) {
    const std::string ctx = "strata";
    std::string type = str_at(j, "type", ctx);
    if (type == "equal_contiguous") {
        long long count = int_at(j, "count", ctx);
        if (count < 1) fail(ctx + ": \"count\" must be positive");
        return Stratification::equal_contiguous(grid_size, static_cast<std::size_t>(count));
    }
    if (type == "explicit") {
        const json& sets = need(j, "index_sets", ctx);
        if (!sets.is_array()) fail(ctx + ": \"index_sets\" must be an array of index arrays");
        std::vector<std::vector<std::size_t>> out;
        for (const json& s : sets) {
            if (!s.is_array()) fail(ctx + ": \"index_sets\" must be an array of index arrays");
            std::vector<std::size_t> one;
            for (const json& e : s) {
                if (!e.is_number_integer() || e.get<long long>() < 0)
                    fail(ctx + ": stratum indices must be nonnegative integers");
                one.push_back(e.get<std::size_t>());
            }
            out.push_back(std::move(one));
        }
        return Stratification(grid_size, std::move(out));
    }
    fail(ctx + ": unknown type \"" + type + "\"");
}

Simulator parse_simulator(const json& j, const GridPtr& grid) {
    const std::string ctx = "simulator";
    std::string type = str_at(j, "type", ctx);
    if (type == "toy_normal")
        return Simulator(ToyNormal{num_at(j, "threshold", ctx)}, grid);
    if (type == "table_bernoulli") {
        auto means = num_array(need(j, "means", ctx), ctx + ".means");
        return Simulator(TableBernoulli{make_conditional_mean_table(std::move(means))}, grid);
    }
    if (type == "windcase_synthetic") {
        // Synthetic exceedance-probability curve: a logistic ramp in wind
        // speed, negligible below ~12 and saturating toward the grid top.
        double center = num_or(j, "center", 20.0, ctx);
        double width = num_or(j, "width", 1.5, ctx);
        if (!(width > 0.0)) fail(ctx + ": \"width\" must be positive");
        std::vector<double> means(grid->size());
        for (std::size_t i = 0; i < grid->size(); ++i)
            means[i] = 1.0 / (1.0 + std::exp(-((*grid)[i] - center) / width));
        return Simulator(TableBernoulli{make_conditional_mean_table(std::move(means))}, grid);
    }
    fail(ctx + ": unknown type \"" + type + "\"");
}

ConditionalMeanTable parse_means(const json& j, const Simulator& sim, std::uint64_t seed) {
    const std::string ctx = "conditional_means";
    std::string type = str_at(j, "type", ctx);
    if (type == "closed_form") return sim.exact_means();
    if (type == "pilot") {
        long long per_point = int_at(j, "per_point", ctx);
        if (per_point < 1) fail(ctx + ": \"per_point\" must be positive");
        return pilot_estimate_cond_means(sim, static_cast<std::size_t>(per_point),
                                         substream_seed(seed, 0x9170));
    }
    if (type == "explicit")
        return make_conditional_mean_table(num_array(need(j, "means", ctx), ctx + ".means"));
    fail(ctx + ": unknown type \"" + type + "\"");
}

InnerSolverConfig parse_inner(const json& j, const std::string& ctx) {
    InnerSolverConfig inner;
    if (j.contains("starts")) {
        long long v = int_at(j, "starts", ctx);
        if (v < 1) fail(ctx + ": \"starts\" must be positive");
        inner.starts = static_cast<int>(v);
    }
    if (j.contains("max_iterations")) {
        long long v = int_at(j, "max_iterations", ctx);
        if (v < 1) fail(ctx + ": \"max_iterations\" must be positive");
        inner.max_iterations = static_cast<int>(v);
    }
    inner.grad_tol = num_or(j, "grad_tol", inner.grad_tol, ctx);
    inner.armijo_c = num_or(j, "armijo_c", inner.armijo_c, ctx);
    if (!(inner.grad_tol > 0.0)) fail(ctx + ": \"grad_tol\" must be positive");
    if (!(inner.armijo_c > 0.0 && inner.armijo_c < 1.0))
        fail(ctx + ": \"armijo_c\" must lie in (0, 1)");
    return inner;
}

BOConfig parse_bo(const json& j) {
    const std::string ctx = "bo";
    BOConfig bo;
    if (j.is_null()) return bo;
    if (!j.is_object()) fail(ctx + ": must be an object");
    long long v;
    if (j.contains("n_initial")) {
        v = int_at(j, "n_initial", ctx);
        if (v < 0) fail(ctx + ": \"n_initial\" must be nonnegative");
        bo.n_initial = static_cast<std::size_t>(v);
    }
    if (j.contains("n_iterations")) {
        v = int_at(j, "n_iterations", ctx);
        if (v < 0) fail(ctx + ": \"n_iterations\" must be nonnegative");
        bo.n_iterations = static_cast<std::size_t>(v);
    }
    if (j.contains("acq_restarts")) {
        v = int_at(j, "acq_restarts", ctx);
        if (v < 1) fail(ctx + ": \"acq_restarts\" must be positive");
        bo.acq_restarts = static_cast<std::size_t>(v);
    }
    bo.floor = num_or(j, "floor", bo.floor, ctx);
    if (!(bo.floor > 0.0)) fail(ctx + ": \"floor\" must be positive");
    if (j.contains("seed_with_str_m")) {
        if (!j["seed_with_str_m"].is_boolean()) fail(ctx + ": \"seed_with_str_m\" is a bool");
        bo.seed_with_str_m = j["seed_with_str_m"].get<bool>();
    }
    if (j.contains("integer_polish")) {
        if (!j["integer_polish"].is_boolean()) fail(ctx + ": \"integer_polish\" is a bool");
        bo.integer_polish = j["integer_polish"].get<bool>();
    }
    if (j.contains("inner")) {
        if (!j["inner"].is_object()) fail(ctx + ": \"inner\" must be an object");
        bo.inner = parse_inner(j["inner"], ctx + ".inner");
    }
    return bo;
}

} // namespace

Experiment parse_experiment(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1;
        std::size_t upto = std::min<std::size_t>(e.byte, json_text.size());
        for (std::size_t i = 0; i < upto; ++i)
            if (json_text[i] == '\n') ++line;
        fail("JSON syntax error at line " + std::to_string(line) + ": " + e.what());
    }
    if (!j.is_object()) fail("top level must be a JSON object");

    const std::string ctx = "experiment";
    std::string name = j.contains("name") ? str_at(j, "name", ctx) : "experiment";
    auto seed = static_cast<std::uint64_t>(
        j.contains("seed") ? int_at(j, "seed", ctx) : 1LL);
    long long threads = j.contains("threads") ? int_at(j, "threads", ctx) : 0LL;
    std::string output_dir = j.contains("output_dir") ? str_at(j, "output_dir", ctx) : "out";
    long long n_total = int_at(j, "n_total", ctx);
    if (n_total < 1) fail(ctx + ": \"n_total\" must be a positive integer");

    GridPtr grid = parse_grid(need(j, "grid", ctx));

    const json& models = need(j, "models", ctx);
    if (!models.is_array() || models.empty()) fail("\"models\" must be a nonempty array");
    std::vector<Pmf> nominals;
    for (std::size_t m = 0; m < models.size(); ++m) {
        std::string mctx = "models[" + std::to_string(m) + "]";
        nominals.push_back(parse_pmf(need(models[m], "nominal", mctx), grid, mctx + ".nominal"));
    }

    const json& ref_j = need(j, "reference", ctx);
    std::string ref_type = str_at(ref_j, "type", "reference");
    Pmf reference = ref_type == "average_of_nominals"
                        ? reference_from_nominals(nominals)
                        : parse_pmf(ref_j, grid, "reference");

    Stratification strat = parse_strata(need(j, "strata", ctx), grid->size());
    Simulator sim = parse_simulator(need(j, "simulator", ctx), grid);
    ConditionalMeanTable means = parse_means(need(j, "conditional_means", ctx), sim, seed);

    Problem problem = make_problem(grid, std::move(reference), std::move(strat),
                                   std::move(means), static_cast<double>(n_total));

    std::vector<AmbiguitySet> sets;
    for (std::size_t m = 0; m < models.size(); ++m) {
        std::string mctx = "models[" + std::to_string(m) + "].ambiguity";
        sets.push_back(parse_set(need(models[m], "ambiguity", mctx), nominals[m], mctx));
    }

    BOConfig bo = parse_bo(j.contains("bo") ? j["bo"] : json());
    bo.seed = seed;
    bo.threads = static_cast<int>(threads);
    bo.inner.seed = seed;
    bo.inner.threads = static_cast<int>(threads);

    return Experiment{std::move(name), seed,      static_cast<int>(threads),
                      std::move(output_dir),      std::move(problem),
                      std::move(nominals),        std::move(sets),
                      std::move(sim),             bo};
}

Experiment load_experiment(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot open \"" + path + "\"");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_experiment(buf.str());
}

std::string config_digest(const std::string& json_text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : json_text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fnv1a:%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace drstrat
