#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cvarrl/budget_grid.hpp"
#include "cvarrl/checks.hpp"
#include "cvarrl/cli.hpp"
#include "cvarrl/dataset.hpp"
#include "cvarrl/driver.hpp"
#include "cvarrl/enumeration.hpp"
#include "cvarrl/errors.hpp"
#include "cvarrl/model.hpp"
#include "cvarrl/risk.hpp"
#include "cvarrl/rng.hpp"
#include "cvarrl/serialize.hpp"

using namespace cvarrl;

namespace {

std::pair<LowRankModel, RewardModel> bench_instance(uint64_t seed) {
    Rng rng = make_rng(seed);
    return make_tabular_lowrank(3, 2, 3, rng);
}

ModelClass class_with_truth(const LowRankModel& truth, int size, uint64_t seed) {
    Rng rng = make_rng(seed);
    return make_perturbed_class(truth, size, 1.0, rng);
}

RunConfig small_config(Algo algo, uint64_t seed) {
    RunConfig config;
    config.tau = 0.4;
    config.K = 4;
    config.upsilon = 0.1;
    config.delta = 0.1;
    config.seed = seed;
    config.algo = algo;
    config.planner = algo == Algo::ela ? Planner::exact : Planner::lsvi;
    config.constants.c_alpha = 0.05;
    if (algo == Algo::ella) {
        config.constants.c_beta = 1e-3;
        config.constants.c_T1 = 12;
        config.constants.c_T2 = 20;
    }
    return config;
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("cvarrl_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    static inline int counter = 0;
};

} // namespace

// ********************************************************************************
// ***** Exploration loop *********************************************************
// ********************************************************************************

TEST_CASE("a single iteration produces a complete record") {
    auto [env, rewards] = bench_instance(110);
    const ModelClass models = class_with_truth(env, 8, 111);
    RunConfig config = small_config(Algo::ela, 112);
    config.K = 1;
    const RunResult result = run_ela(env, rewards, models, config);
    REQUIRE(result.records.size() == 1);
    CHECK(result.records[0].k == 1);
    CHECK(result.env_episodes == 3);
    CHECK(result.best_k == 1);
    CHECK(result.sampled_k == 1);
    CHECK(result.cvar_star >= 0.0);
    CHECK(result.cvar_star <= 3.0);
    CHECK(result.best_cvar <= result.cvar_star + 1e-9);
}

TEST_CASE("a truth-only class with no bonus plans optimally at once") {
    auto [env, rewards] = bench_instance(113);
    ModelClass models;
    models.candidates = {env};
    models.includes_truth = true;
    models.truth_index = 0;
    RunConfig config = small_config(Algo::ela, 114);
    config.K = 2;
    config.constants.c_alpha = 0.0;
    const RunResult result = run_ela(env, rewards, models, config);
    for (const IterationRecord& rec : result.records) {
        CHECK(rec.cvar_planned == doctest::Approx(result.cvar_star).epsilon(1e-9));
        CHECK(rec.cvar_true_of_iterate == doctest::Approx(result.cvar_star).epsilon(1e-9));
        CHECK(rec.regret_k <= 1e-9);
    }
}

TEST_CASE("environment use is exactly H episodes per iteration") {
    auto [env, rewards] = bench_instance(115);
    const ModelClass models = class_with_truth(env, 4, 116);
    for (Algo algo : {Algo::ela, Algo::ella}) {
        const RunConfig config = small_config(algo, 117);
        const RunResult result = algo == Algo::ela
                                     ? run_ela(env, rewards, models, config)
                                     : run_ella(env, rewards, models, config);
        CHECK(result.env_episodes == static_cast<long>(config.K) * env.H);
        REQUIRE(static_cast<int>(result.records.size()) == config.K);
        for (const IterationRecord& rec : result.records)
            CHECK(rec.regret_k >= -1e-9);
    }
}

TEST_CASE("repeat runs with one seed serialize identically") {
    auto [env, rewards] = bench_instance(118);
    const ModelClass models = class_with_truth(env, 6, 119);
    const RunConfig config = small_config(Algo::ela, 120);
    const RunResult first = run_ela(env, rewards, models, config);
    const RunResult second = run_ela(env, rewards, models, config);
    nlohmann::json lhs = run_result_to_json(first, config);
    nlohmann::json rhs = run_result_to_json(second, config);
    // wall-clock timings are the one legitimately nondeterministic field
    for (nlohmann::json* doc : {&lhs, &rhs})
        for (nlohmann::json& rec : (*doc)["records"])
            rec.erase("wall_ms");
    CHECK(lhs.dump() == rhs.dump());
}

TEST_CASE("iteration callbacks stream the same records the result keeps") {
    auto [env, rewards] = bench_instance(121);
    const ModelClass models = class_with_truth(env, 4, 122);
    const RunConfig config = small_config(Algo::ela, 123);
    std::vector<IterationRecord> streamed;
    const RunResult result = run_ela(env, rewards, models, config,
                                     [&](const IterationRecord& rec) {
                                         streamed.push_back(rec);
                                     });
    REQUIRE(streamed.size() == result.records.size());
    for (size_t k = 0; k < streamed.size(); ++k)
        CHECK(metrics_csv_line(streamed[k]) == metrics_csv_line(result.records[k]));
}

TEST_CASE("the final dataset snapshot matches the episode budget") {
    auto [env, rewards] = bench_instance(124);
    const ModelClass models = class_with_truth(env, 4, 125);
    const RunConfig config = small_config(Algo::ela, 126);
    TransitionDataset data(env.H);
    const RunResult result = run_ela(env, rewards, models, config, {}, &data);
    (void)result;
    for (int h = 1; h <= env.H - 1; ++h) {
        CHECK(static_cast<int>(data.D[h - 1].size()) == config.K);
        CHECK(static_cast<int>(data.Dtilde[h - 1].size()) == config.K);
    }
}

TEST_CASE("regret trends downward on the benchmark family") {
    const CheckResult result = check_learning_signal(10, 40, 9, 127);
    INFO(result.detail);
    CHECK(result.pass);
}

// ********************************************************************************
// ***** Sample-based planner loop ************************************************
// ********************************************************************************

TEST_CASE("minimal round counts still complete") {
    auto [env, rewards] = bench_instance(128);
    const ModelClass models = class_with_truth(env, 4, 129);
    RunConfig config = small_config(Algo::ella, 130);
    config.K = 2;
    config.constants.c_T1 = 1;
    config.constants.c_T2 = 1;
    const RunResult result = run_ella(env, rewards, models, config);
    CHECK(result.records.size() == 2);
    CHECK(result.env_episodes == 6);
}

// ********************************************************************************
// ***** Configuration ************************************************************
// ********************************************************************************

TEST_CASE("invalid configurations are rejected with reasons") {
    RunConfig config = small_config(Algo::ela, 131);
    CHECK_NOTHROW(config.validate());

    RunConfig bad = config;
    bad.algo = Algo::ela;
    bad.planner = Planner::lsvi;
    CHECK_THROWS_AS(bad.validate(), ConfigInvalid);
    bad = small_config(Algo::ella, 132);
    bad.planner = Planner::exact;
    CHECK_THROWS_AS(bad.validate(), ConfigInvalid);
    bad = config;
    bad.tau = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigInvalid);
    bad = config;
    bad.K = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigInvalid);
    bad = config;
    bad.upsilon = -0.1;
    CHECK_THROWS_AS(bad.validate(), ConfigInvalid);
    bad = small_config(Algo::ella, 133);
    bad.constants.c_T1 = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigInvalid);
}

TEST_CASE("run configurations round-trip through JSON") {
    RunConfig config = small_config(Algo::ella, 134);
    nlohmann::json doc;
    doc["tau"] = config.tau;
    doc["K"] = config.K;
    doc["upsilon"] = config.upsilon;
    doc["delta"] = config.delta;
    doc["seed"] = config.seed;
    doc["algo"] = "ella";
    doc["constants"] = {{"c_alpha", config.constants.c_alpha},
                        {"c_lambda", config.constants.c_lambda},
                        {"c_beta", config.constants.c_beta},
                        {"c_T1", config.constants.c_T1},
                        {"c_T2", config.constants.c_T2}};
    const RunConfig parsed = run_config_from_json(doc);
    CHECK(parsed.tau == config.tau);
    CHECK(parsed.K == config.K);
    CHECK(parsed.seed == config.seed);
    CHECK(parsed.algo == Algo::ella);
    CHECK(parsed.planner == Planner::lsvi);
    CHECK(parsed.constants.c_T1 == config.constants.c_T1);

    doc["algo"] = "something";
    CHECK_THROWS_AS(run_config_from_json(doc), ConfigInvalid);
}

TEST_CASE("metrics files carry one line per iteration") {
    auto [env, rewards] = bench_instance(135);
    const ModelClass models = class_with_truth(env, 4, 136);
    const RunConfig config = small_config(Algo::ela, 137);
    const RunResult result = run_ela(env, rewards, models, config);

    TempDir tmp;
    const std::string path = (tmp.path / "metrics.csv").string();
    write_metrics_csv(path, result);
    std::ifstream in(path);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == std::string(kMetricsHeader));
    int rows = 0;
    while (std::getline(in, line)) {
        if (!line.empty())
            ++rows;
    }
    CHECK(rows == config.K);
}

// ********************************************************************************
// ***** Command line *************************************************************
// ********************************************************************************

TEST_CASE("generated environments are identical across invocations") {
    TempDir tmp;
    const std::string first = (tmp.path / "env_a.json").string();
    const std::string second = (tmp.path / "env_b.json").string();
    const std::vector<std::string> base = {"gen-env", "--states", "3", "--actions", "2",
                                           "--horizon", "3", "--seed", "5", "--out"};
    std::vector<std::string> args = base;
    args.push_back(first);
    REQUIRE(cli_main(args) == 0);
    args = base;
    args.push_back(second);
    REQUIRE(cli_main(args) == 0);
    CHECK(slurp(first) == slurp(second));
    CHECK(!slurp(first).empty());
}

TEST_CASE("a full run from the command line survives re-evaluation") {
    TempDir tmp;
    const std::string env_path = (tmp.path / "env.json").string();
    REQUIRE(cli_main({"gen-env", "--states", "3", "--actions", "2", "--horizon", "3",
                      "--seed", "9", "--out", env_path}) == 0);

    nlohmann::json config_doc;
    config_doc["env"] = "env.json";
    config_doc["tau"] = 0.4;
    config_doc["K"] = 3;
    config_doc["upsilon"] = 0.1;
    config_doc["delta"] = 0.1;
    config_doc["seed"] = 21;
    config_doc["algo"] = "ela";
    config_doc["constants"] = {{"c_alpha", 0.05}};
    const std::string config_path = (tmp.path / "run.json").string();
    write_json_file(config_path, config_doc);

    const std::string out_dir = (tmp.path / "out").string();
    REQUIRE(cli_main({"run", "--config", config_path, "--out-dir", out_dir}) == 0);

    const nlohmann::json result_doc = read_json_file(out_dir + "/result.json");
    CHECK(result_doc.at("env_episodes").get<long>() == 9);
    REQUIRE(result_doc.at("records").size() == 3);

    // recompute the best iterate's true CVaR from the stored policy
    auto [env, rewards] = instance_from_json(read_json_file(env_path));
    const AugmentedPolicy best = policy_from_json(result_doc.at("best").at("policy"));
    const ReturnDistribution dist = wrapped_policy_return_dist(
        env, rewards, best, result_doc.at("best").at("c_index").get<int>(), best.grid);
    CHECK(cvar_of_distribution(dist, 0.4) ==
          doctest::Approx(result_doc.at("best").at("cvar_true").get<double>())
              .epsilon(1e-9));

    CHECK(cli_main({"eval", "--env", env_path, "--result", out_dir + "/result.json",
                    "--which", "best"}) == 0);

    std::ifstream metrics(out_dir + "/metrics.csv");
    std::string line;
    REQUIRE(std::getline(metrics, line));
    CHECK(line == std::string(kMetricsHeader));
}

TEST_CASE("missing inputs exit with the configuration code") {
    CHECK(cli_main({"oracle", "--env", "/nonexistent/env.json", "--tau", "0.4"}) == 2);
    CHECK(cli_main({"run", "--config", "/nonexistent/run.json"}) == 2);
    CHECK(cli_main({"definitely-not-a-command"}) == 2);
}
