#include "cvarrl/cli.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cvarrl/bonus.hpp"
#include "cvarrl/budget_grid.hpp"
#include "cvarrl/checks.hpp"
#include "cvarrl/dataset.hpp"
#include "cvarrl/driver.hpp"
#include "cvarrl/enumeration.hpp"
#include "cvarrl/errors.hpp"
#include "cvarrl/model.hpp"
#include "cvarrl/risk.hpp"
#include "cvarrl/rng.hpp"
#include "cvarrl/serialize.hpp"
#include "cvarrl/value_iteration.hpp"

namespace cvarrl {

namespace {

using nlohmann::json;

/** Shortest decimal that round-trips the double. */
std::string num(double x) { return json(x).dump(); }

std::string resolve_path(const std::string& base_file, const std::string& path) {
    const std::filesystem::path p(path);
    if (p.is_absolute())
        return path;
    return (std::filesystem::path(base_file).parent_path() / p).string();
}

int cmd_gen_env(int states, int actions, int horizon, double upsilon, double alpha,
                uint64_t seed, const std::string& out) {
    Rng rng = make_rng(seed);
    auto [model, rewards] = make_tabular_lowrank(states, actions, horizon, rng, alpha, upsilon);
    Rng check = make_rng(mix_seed(seed, 1));
    validate_low_rank(model, check);
    validate_rewards(rewards, states, actions, horizon);
    write_json_file(out, instance_to_json(model, rewards));
    std::cout << "wrote " << out << " (states=" << states << " actions=" << actions
              << " horizon=" << horizon << " upsilon=" << num(upsilon) << ")\n";
    return 0;
}

int cmd_oracle(const std::string& env_path, double tau, double upsilon,
               const std::string& dump_values) {
    auto [model, rewards] = instance_from_json(read_json_file(env_path));
    if (upsilon > 0.0 && std::abs(upsilon - rewards.upsilon) > 1e-9)
        throw ConfigInvalid("oracle: the enumeration grid must match the reward precision " +
                            num(rewards.upsilon));
    const BudgetGrid grid(rewards.upsilon, model.H);
    const OracleResult oracle = enumerate_cvar_oracle(model, rewards, tau, grid);
    std::cout << "cvar_star=" << num(oracle.cvar_star) << "\n";
    std::cout << "c_star=" << num(grid.value(oracle.c_star_index)) << "\n";
    std::cout << "c_star_index=" << oracle.c_star_index << "\n";
    if (!dump_values.empty()) {
        const ValueTable table = augmented_vi(
            model, rewards, zero_bonus(model.H, model.num_states, model.A), grid);
        write_json_file(dump_values, value_table_to_json(table));
        std::cout << "wrote " << dump_values << "\n";
    }
    return 0;
}

int cmd_run(const std::string& config_path, const std::string& out_dir, bool dump_data) {
    const json doc = read_json_file(config_path);
    const RunConfig config = run_config_from_json(doc);
    if (!doc.contains("env"))
        throw ConfigInvalid("run config: missing env path");
    auto [env, rewards] = instance_from_json(
        read_json_file(resolve_path(config_path, doc.at("env").get<std::string>())));
    Rng check = make_rng(mix_seed(config.seed, 99));
    validate_low_rank(env, check);
    validate_rewards(rewards, env.num_states, env.A, env.H);

    int class_size = 8;
    double perturb_alpha = 1.0;
    bool include_truth = true;
    uint64_t class_seed = mix_seed(config.seed, 77);
    if (doc.contains("model_class")) {
        const json& mc = doc.at("model_class");
        if (mc.contains("size"))
            class_size = mc.at("size").get<int>();
        if (mc.contains("perturb_alpha"))
            perturb_alpha = mc.at("perturb_alpha").get<double>();
        if (mc.contains("include_truth"))
            include_truth = mc.at("include_truth").get<bool>();
        if (mc.contains("seed"))
            class_seed = mc.at("seed").get<uint64_t>();
    }
    if (class_size < 1)
        throw ConfigInvalid("run config: model class size must be positive");
    Rng class_rng = make_rng(class_seed);
    ModelClass models =
        make_perturbed_class(env, include_truth ? class_size : class_size + 1,
                             perturb_alpha, class_rng);
    if (!include_truth) {
        models.candidates.erase(models.candidates.begin());
        models.includes_truth = false;
        models.truth_index = -1;
    }

    std::filesystem::create_directories(out_dir);
    const std::string metrics_path = out_dir + "/metrics.csv";
    std::ofstream metrics(metrics_path);
    if (!metrics)
        throw ConfigInvalid("run: cannot open " + metrics_path);
    metrics << kMetricsHeader << "\n";
    const IterationCallback stream = [&metrics](const IterationRecord& rec) {
        metrics << metrics_csv_line(rec) << "\n";
        metrics.flush();
    };

    TransitionDataset data(env.H);
    TransitionDataset* data_out = dump_data ? &data : nullptr;
    const RunResult result =
        config.algo == Algo::ela
            ? run_ela(env, rewards, models, config, stream, data_out)
            : run_ella(env, rewards, models, config, stream, data_out);

    write_json_file(out_dir + "/result.json", run_result_to_json(result, config));
    if (dump_data) {
        const std::string data_path = out_dir + "/dataset.jsonl";
        std::ofstream data_file(data_path);
        if (!data_file)
            throw ConfigInvalid("run: cannot open " + data_path);
        dump_dataset_jsonl(data, data_file);
    }

    std::cout << "cvar_star=" << num(result.cvar_star) << "\n"
              << "best_k=" << result.best_k << "\n"
              << "best_cvar=" << num(result.best_cvar) << "\n"
              << "best_regret=" << num(result.cvar_star - result.best_cvar) << "\n"
              << "env_episodes=" << result.env_episodes << "\n"
              << "wrote " << out_dir << "/result.json\n";
    return 0;
}

int cmd_eval(const std::string& env_path, const std::string& result_path,
             const std::string& which, double tau_override) {
    auto [env, rewards] = instance_from_json(read_json_file(env_path));
    const json doc = read_json_file(result_path);
    const json& slot = doc.at(which);
    const AugmentedPolicy policy = policy_from_json(slot.at("policy"));
    const int c_index = slot.at("c_index").get<int>();
    const double tau = tau_override > 0.0 ? tau_override : doc.at("tau").get<double>();
    const ReturnDistribution dist =
        wrapped_policy_return_dist(env, rewards, policy, c_index, policy.grid);
    std::cout << "k=" << slot.at("k").get<int>() << "\n"
              << "c_index=" << c_index << "\n"
              << "cvar_true=" << num(cvar_of_distribution(dist, tau)) << "\n";
    return 0;
}

int cmd_props(uint64_t seed) {
    std::vector<CheckResult> results;
    results.push_back(check_instance_invariants(200, mix_seed(seed, 1)));
    results.push_back(check_cvar_functional(10, 20000, 0.03, mix_seed(seed, 2)));
    results.push_back(check_discretization_sandwich(12, mix_seed(seed, 3)));
    results.push_back(check_simulation_lemmas(24, mix_seed(seed, 4)));
    results.push_back(check_potential_bounds(12, 300, mix_seed(seed, 5)));
    results.push_back(check_planner_matches_oracle(24, mix_seed(seed, 6)));
    results.push_back(check_mle_error(10, 600, 8, 10.0 * std::log(8.0 / 0.05) / 600.0, 8,
                                      mix_seed(seed, 7)));
    LsviCheckParams quick;
    quick.runs = 8;
    quick.T1 = 80;
    quick.T2 = 200;
    results.push_back(check_lsvi_accuracy(quick, 0.2, 6, mix_seed(seed, 8)));
    LsviCheckParams optimistic = quick;
    optimistic.c_beta = bench::c_beta_optimism;
    results.push_back(check_lsvi_optimism(optimistic, 1e-6, 6, mix_seed(seed, 9)));
    results.push_back(check_learning_signal(4, 40, 3, mix_seed(seed, 10)));

    bool all = true;
    for (const CheckResult& r : results) {
        std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
        all = all && r.pass;
    }
    return all ? 0 : 3;
}

} // namespace

int cli_main(const std::vector<std::string>& args) {
    CLI::App app{"CVaR-optimal exploration and planning in low-rank MDPs", "cvarrl"};
    app.require_subcommand(1);

    int states = 3, actions = 2, horizon = 3;
    double gen_upsilon = 0.1, dirichlet = 1.0;
    uint64_t gen_seed = 0;
    std::string gen_out;
    CLI::App* gen = app.add_subcommand("gen-env", "sample a tabular low-rank instance");
    gen->add_option("--states", states, "state count")
        ->check(CLI::Range(1, 64))->capture_default_str();
    gen->add_option("--actions", actions, "action count")
        ->check(CLI::Range(1, 64))->capture_default_str();
    gen->add_option("--horizon", horizon, "episode length")
        ->check(CLI::Range(1, 16))->capture_default_str();
    gen->add_option("--upsilon", gen_upsilon, "reward grid precision")
        ->check(CLI::Range(1e-6, 1.0))->capture_default_str();
    gen->add_option("--dirichlet", dirichlet, "Dirichlet concentration")
        ->check(CLI::Range(1e-6, 1e6))->capture_default_str();
    gen->add_option("--seed", gen_seed, "generator seed")->capture_default_str();
    gen->add_option("--out", gen_out, "output instance path")->required();

    std::string oracle_env, oracle_dump;
    double oracle_tau = 0.5, oracle_upsilon = -1.0;
    CLI::App* oracle = app.add_subcommand("oracle", "brute-force CVaR optimum of an instance");
    oracle->add_option("--env", oracle_env, "instance path")->required();
    oracle->add_option("--tau", oracle_tau, "CVaR level in (0, 1]")->required();
    oracle->add_option("--upsilon", oracle_upsilon,
                       "budget grid precision; must match the reward precision");
    oracle->add_option("--dump-values", oracle_dump, "write the exact value tables here");

    std::string run_config, run_out;
    bool run_dump_data = false;
    CLI::App* run = app.add_subcommand("run", "full exploration loop from a config file");
    run->add_option("--config", run_config, "run config path")->required();
    run->add_option("--out-dir", run_out, "output directory")->required();
    run->add_flag("--dump-data", run_dump_data, "also write the collected transitions");

    std::string eval_env, eval_result, eval_which = "best";
    double eval_tau = -1.0;
    CLI::App* eval = app.add_subcommand("eval", "re-evaluate a stored policy exactly");
    eval->add_option("--env", eval_env, "instance path")->required();
    eval->add_option("--result", eval_result, "result.json from a run")->required();
    eval->add_option("--which", eval_which, "best or sampled")
        ->check(CLI::IsMember({"best", "sampled"}))->capture_default_str();
    eval->add_option("--tau", eval_tau, "CVaR level; defaults to the run's");

    uint64_t props_seed = 0;
    CLI::App* props = app.add_subcommand("props", "quick property suite, PASS/FAIL per line");
    props->add_option("--seed", props_seed, "suite seed")->capture_default_str();

    int rc = 0;
    gen->callback([&] {
        rc = cmd_gen_env(states, actions, horizon, gen_upsilon, dirichlet, gen_seed, gen_out);
    });
    oracle->callback([&] { rc = cmd_oracle(oracle_env, oracle_tau, oracle_upsilon, oracle_dump); });
    run->callback([&] { rc = cmd_run(run_config, run_out, run_dump_data); });
    eval->callback([&] { rc = cmd_eval(eval_env, eval_result, eval_which, eval_tau); });
    props->callback([&] { rc = cmd_props(props_seed); });

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(std::move(reversed));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    }
    return rc;
}

} // namespace cvarrl
