#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include <json.hpp>

#include "drstrat/config.hpp"

using namespace drstrat;
using nlohmann::json;

namespace {

json base_config() {
    return json::parse(R"({
      "name": "cfg-test",
      "seed": 99,
      "threads": 2,
      "output_dir": "outdir",
      "n_total": 40,
      "grid": {"type": "explicit", "points": [0.0, 1.0, 2.0, 3.0]},
      "models": [
        {"nominal": {"type": "explicit", "mass": [0.4, 0.3, 0.2, 0.1]},
         "ambiguity": {"type": "l2", "gamma": 0.05}},
        {"nominal": {"type": "explicit", "mass": [0.1, 0.2, 0.3, 0.4]},
         "ambiguity": {"type": "moment", "gamma1": 0.02, "gamma2_lb": 0.9, "gamma2_ub": 1.1}}
      ],
      "reference": {"type": "average_of_nominals"},
      "strata": {"type": "equal_contiguous", "count": 2},
      "simulator": {"type": "table_bernoulli", "means": [0.1, 0.3, 0.6, 0.9]},
      "conditional_means": {"type": "closed_form"},
      "bo": {"n_iterations": 7, "acq_restarts": 16, "inner": {"starts": 4}}
    })");
}

Experiment parse(const json& j) { return parse_experiment(j.dump()); }

std::string error_of(const json& j) {
    try {
        parse(j);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST_CASE("a full config parses into the right experiment") {
    Experiment exp = parse(base_config());
    CHECK(exp.name == "cfg-test");
    CHECK(exp.seed == 99);
    CHECK(exp.threads == 2);
    CHECK(exp.output_dir == "outdir");
    CHECK(exp.problem.n_total == 40.0);
    REQUIRE(exp.problem.grid->size() == 4);
    CHECK((*exp.problem.grid)[3] == 3.0);

    REQUIRE(exp.nominals.size() == 2);
    CHECK(exp.nominals[0][0] == doctest::Approx(0.4).epsilon(1e-12));
    // average_of_nominals: (0.4+0.1)/2 = 0.25 everywhere here
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(exp.problem.reference[i] == doctest::Approx(0.25).epsilon(1e-12));

    CHECK(exp.problem.strat.num_strata() == 2);
    CHECK(exp.simulator.exact_mean(2) == 0.6);
    // closed_form means come straight off the simulator table
    CHECK(exp.problem.means.means == std::vector<double>{0.1, 0.3, 0.6, 0.9});

    REQUIRE(exp.sets.size() == 2);
    CHECK_FALSE(is_parametric(exp.sets[0]));
    CHECK_FALSE(is_parametric(exp.sets[1]));

    // solver settings inherit the experiment seed/threads
    CHECK(exp.bo.n_iterations == 7);
    CHECK(exp.bo.acq_restarts == 16);
    CHECK(exp.bo.seed == 99);
    CHECK(exp.bo.threads == 2);
    CHECK(exp.bo.inner.seed == 99);
    CHECK(exp.bo.inner.threads == 2);
    CHECK(exp.bo.inner.starts == 4);
}

TEST_CASE("optional fields default") {
    json j = base_config();
    j.erase("name");
    j.erase("seed");
    j.erase("threads");
    j.erase("output_dir");
    j.erase("bo");
    Experiment exp = parse(j);
    CHECK(exp.name == "experiment");
    CHECK(exp.seed == 1);
    CHECK(exp.threads == 0);
    CHECK(exp.output_dir == "out");
    CHECK(exp.bo.n_iterations == BOConfig{}.n_iterations);
    CHECK(exp.bo.seed == 1);
    CHECK(exp.bo.inner.seed == 1);
}

TEST_CASE("syntax errors report the line") {
    std::string text = "{\n  \"name\": \"x\",\n  \"n_total\": oops\n}";
    try {
        parse_experiment(text);
        FAIL("expected a parse failure");
    } catch (const ConfigError& e) {
        std::string msg = e.what();
        CHECK(msg.find("line 3") != std::string::npos);
    }
}

TEST_CASE("schema errors name the offending field") {
    json j = base_config();
    j.erase("n_total");
    CHECK(error_of(j).find("n_total") != std::string::npos);

    j = base_config();
    j["grid"]["type"] = "banana";
    CHECK(error_of(j).find("banana") != std::string::npos);

    j = base_config();
    j["n_total"] = 0;
    CHECK(error_of(j).find("n_total") != std::string::npos);

    j = base_config();
    j["models"] = json::array();
    CHECK(error_of(j).find("models") != std::string::npos);

    j = base_config();
    j["models"][1]["ambiguity"].erase("gamma1");
    CHECK(error_of(j).find("gamma1") != std::string::npos);

    j = base_config();
    j["bo"] = 3;
    CHECK(error_of(j).find("bo") != std::string::npos);

    j = base_config();
    j["simulator"]["type"] = "quantum";
    CHECK(error_of(j).find("quantum") != std::string::npos);

    j = base_config();
    j["conditional_means"]["type"] = "psychic";
    CHECK_FALSE(error_of(j).empty());

    j = base_config();
    j["seed"] = 1.5;
    CHECK(error_of(j).find("integer") != std::string::npos);
}

TEST_CASE("grid forms: affine with scale_squared, linspace") {
    json j = base_config();
    j["grid"] = {{"type", "affine_integer"}, {"i_min", 23}, {"i_max", 57},
                 {"shift", 40},             {"scale_squared", 20}};
    j["models"] = json::array();
    json model = {{"nominal", {{"type", "scaled_binomial"}, {"n_trials", 75}, {"p", 0.55},
                               {"shift", 40}, {"scale_squared", 20}}},
                  {"ambiguity", {{"type", "l2"}, {"gamma", 0.05}}}};
    j["models"].push_back(model);
    j["reference"] = {{"type", "average_of_nominals"}};
    j["strata"] = {{"type", "equal_contiguous"}, {"count", 7}};
    j["simulator"] = {{"type", "toy_normal"}, {"threshold", 5.2}};
    j["conditional_means"] = {{"type", "closed_form"}};
    Experiment exp = parse(j);
    REQUIRE(exp.problem.grid->size() == 35);
    CHECK((*exp.problem.grid)[0] == (23.0 - 40.0) / std::sqrt(20.0));
    CHECK(is_parametric(exp.sets[0]) == false);

    // the same grid spelled with the explicit scale is bitwise identical
    json k = j;
    k["grid"] = {{"type", "affine_integer"}, {"i_min", 23}, {"i_max", 57},
                 {"shift", 40},             {"scale", std::sqrt(20.0)}};
    Experiment exp2 = parse(k);
    for (std::size_t i = 0; i < 35; ++i)
        CHECK((*exp2.problem.grid)[i] == (*exp.problem.grid)[i]);

    json l = base_config();
    l["grid"] = {{"type", "linspace"}, {"start", 3.0}, {"step", 0.1}, {"count", 4}};
    Experiment exp3 = parse(l);
    CHECK((*exp3.problem.grid)[3] == doctest::Approx(3.3).epsilon(1e-12));
}

TEST_CASE("rayleigh nominals accept a mean wind speed in place of sigma") {
    json j = base_config();
    j["grid"] = {{"type", "linspace"}, {"start", 3.0}, {"step", 0.5}, {"count", 20}};
    j["simulator"] = {{"type", "windcase_synthetic"}};
    j["conditional_means"] = {{"type", "closed_form"}};
    j["strata"] = {{"type", "equal_contiguous"}, {"count", 4}};
    j["models"] = json::array();
    json by_mean = {{"nominal", {{"type", "rayleigh"}, {"mean", 9.0}, {"delta", 1.0}}},
                    {"ambiguity", {{"type", "l2"}, {"gamma", 0.05}}}};
    j["models"].push_back(by_mean);
    Experiment a = parse(j);

    double sigma = 9.0 * std::sqrt(2.0 / M_PI);
    j["models"][0]["nominal"] = {{"type", "rayleigh"}, {"sigma", sigma}, {"delta", 1.0}};
    Experiment b = parse(j);
    for (std::size_t i = 0; i < a.problem.grid->size(); ++i)
        CHECK(a.nominals[0][i] == b.nominals[0][i]);

    // windcase simulator defaults: logistic in wind speed, center 20 width 1.5
    json w = j;
    w["grid"] = {{"type", "explicit"}, {"points", {14.0, 20.0, 26.0}}};
    w["strata"] = {{"type", "equal_contiguous"}, {"count", 3}};
    w["models"][0]["nominal"] = {{"type", "explicit"}, {"mass", {0.3, 0.4, 0.3}}};
    Experiment c = parse(w);
    CHECK(c.simulator.exact_mean(1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(c.simulator.exact_mean(2) ==
          doctest::Approx(1.0 / (1.0 + std::exp(-4.0))).epsilon(1e-12));
}

TEST_CASE("parametric family specs") {
    json j = base_config();
    j["grid"] = {{"type", "affine_integer"}, {"i_min", 23}, {"i_max", 57},
                 {"shift", 40},             {"scale_squared", 20}};
    j["strata"] = {{"type", "equal_contiguous"}, {"count", 7}};
    j["simulator"] = {{"type", "toy_normal"}, {"threshold", 5.2}};
    j["conditional_means"] = {{"type", "closed_form"}};
    j["models"] = json::array();
    json model = {{"nominal", {{"type", "scaled_binomial"}, {"n_trials", 75}, {"p", 0.55},
                               {"shift", 40}, {"scale_squared", 20}}},
                  {"ambiguity", {{"type", "binomial"}, {"shift", 40}, {"scale_squared", 20},
                                 {"thetas", {{70, 0.55}, {75, 0.55}, {80, 0.55}}}}}};
    j["models"].push_back(model);
    Experiment exp = parse(j);
    CHECK(is_parametric(exp.sets[0]));
    CHECK(enumerate_parametric_members(exp.sets[0]).size() == 3);

    json bad = j;
    bad["models"][0]["ambiguity"]["thetas"] = {{75.5, 0.55}};
    CHECK(error_of(bad).find("integer") != std::string::npos);
    bad["models"][0]["ambiguity"]["thetas"] = json::array();
    CHECK_FALSE(error_of(bad).empty());
}

TEST_CASE("explicit strata and pilot-estimated means") {
    json j = base_config();
    j["strata"] = {{"type", "explicit"}, {"index_sets", {{0, 2}, {1, 3}}}};
    Experiment exp = parse(j);
    CHECK(exp.problem.strat.stratum_of(2) == 0);
    CHECK(exp.problem.strat.stratum_of(3) == 1);

    json p = base_config();
    p["conditional_means"] = {{"type", "pilot"}, {"per_point", 5000}};
    Experiment a = parse(p);
    Experiment b = parse(p);
    CHECK(a.problem.means.means == b.problem.means.means); // same seed, same pilot
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(std::abs(a.problem.means.means[i] - exp.problem.means.means[i]) < 0.05);

    p["conditional_means"]["per_point"] = 0;
    CHECK(error_of(p).find("per_point") != std::string::npos);
}

TEST_CASE("digest: stable, prefixed, content-sensitive") {
    std::string a = base_config().dump();
    std::string b = base_config().dump();
    json other = base_config();
    other["seed"] = 100;
    CHECK(config_digest(a) == config_digest(b));
    CHECK(config_digest(a) != config_digest(other.dump()));
    CHECK(config_digest(a).rfind("fnv1a:", 0) == 0);
}

TEST_CASE("load_experiment reads files and reports missing ones") {
    std::string path = "cfg_roundtrip_test.json";
    {
        std::ofstream out(path);
        out << base_config().dump(2);
    }
    Experiment exp = load_experiment(path);
    CHECK(exp.name == "cfg-test");
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_experiment("does_not_exist_479.json"), ConfigError);
}
