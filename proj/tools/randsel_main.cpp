#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "randsel/randsel.hpp"

namespace {

using namespace randsel;
using nlohmann::json;

void emit(const json& j, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << j.dump(2) << '\n';
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + out_path + "'");
    out << j.dump(2) << '\n';
}

// estimate/kalman need noise covariances; identity is the documented default
// when the system file leaves them null.
LtiSystem with_default_noise(LtiSystem sys, bool need_q) {
    if (!sys.R) sys.R = Matrix::Identity(sys.m(), sys.m());
    if (need_q && !sys.Q) sys.Q = Matrix::Identity(sys.n(), sys.n());
    return sys;
}

int bound_for(const LtiSystem& sys, const GramianSet& gs, Strategy strategy,
              double eps, double delta, double* value = nullptr) {
    switch (strategy) {
        case Strategy::MaxEigWeights: {
            if (value) *value = sample_bound_maxeig_value(gs, eps, delta);
            return sample_bound_maxeig(gs, eps, delta);
        }
        case Strategy::GammaWeights: {
            const GammaScores scores = gamma_scores(gs);
            if (value) *value = sample_bound_loewner_value(scores, sys.n(), eps, delta);
            return sample_bound_loewner(scores, sys.n(), eps, delta);
        }
        case Strategy::TraceWeights:
            // The trace guarantee holds for every c >= 1.
            if (value) *value = 1.0;
            return 1;
        case Strategy::Uniform:
            throw InputError("no sample-complexity bound exists for the uniform strategy");
    }
    throw InputError("bound_for: unhandled strategy");
}

int run(int argc, char** argv) {
    CLI::App app{"Randomized sensor selection for LTI systems"};
    app.require_subcommand(1);

    std::string system_path, out_path, config_path, strategy_str = "gamma",
                              metric_str = "mineig", format = "csv";
    std::uint64_t seed = 1;
    int count = 0, jobs = 0;
    double eps = 0.5, delta = 0.1;

    auto add_system = [&](CLI::App* cmd) {
        cmd->add_option("system", system_path, "system JSON file")->required();
        cmd->add_option("--out", out_path, "output file (default stdout)");
    };

    auto* cmd_gramian = app.add_subcommand("gramian", "Gramian and its metrics");
    add_system(cmd_gramian);

    auto* cmd_plan = app.add_subcommand("plan", "sampling probabilities");
    add_system(cmd_plan);
    cmd_plan->add_option("--strategy", strategy_str, "maxeig|trace|gamma|uniform");

    auto* cmd_select = app.add_subcommand("select", "draw a sensor sample");
    add_system(cmd_select);
    cmd_select->add_option("--strategy", strategy_str, "maxeig|trace|gamma|uniform");
    cmd_select->add_option("-c,--count", count, "number of draws")->required();
    cmd_select->add_option("--seed", seed, "rng seed");

    auto* cmd_bound = app.add_subcommand("bound", "sample-complexity bound");
    add_system(cmd_bound);
    cmd_bound->add_option("--strategy", strategy_str, "maxeig|trace|gamma");
    cmd_bound->add_option("--eps", eps, "accuracy parameter in (0,1)");
    cmd_bound->add_option("--delta", delta, "failure probability");

    auto* cmd_greedy = app.add_subcommand("greedy", "greedy baseline selection");
    add_system(cmd_greedy);
    cmd_greedy->add_option("--metric", metric_str, "mineig|maxeig|trace|traceinv");
    cmd_greedy->add_option("--eps", eps, "threshold parameter in (0,1)");

    auto* cmd_estimate = app.add_subcommand("estimate", "reduced least-squares system");
    add_system(cmd_estimate);
    cmd_estimate->add_option("--strategy", strategy_str, "maxeig|trace|gamma|uniform");
    cmd_estimate->add_option("--eps", eps, "accuracy parameter in (0,1)");
    cmd_estimate->add_option("--delta", delta, "failure probability");
    cmd_estimate->add_option("-c,--count", count, "override the sample count");
    cmd_estimate->add_option("--seed", seed, "rng seed");

    auto* cmd_kalman = app.add_subcommand("kalman", "steady-state covariance gap");
    add_system(cmd_kalman);
    cmd_kalman->add_option("--strategy", strategy_str, "maxeig|trace|gamma|uniform");
    cmd_kalman->add_option("--eps", eps, "accuracy parameter in (0,1)");
    cmd_kalman->add_option("--delta", delta, "failure probability");
    cmd_kalman->add_option("-c,--count", count, "override the sample count");
    cmd_kalman->add_option("--seed", seed, "rng seed");

    std::string kind;
    auto* cmd_exp = app.add_subcommand("experiment", "Monte Carlo experiment run");
    cmd_exp->add_option("kind", kind, "validation|greedy|estimation|kalman")->required();
    cmd_exp->add_option("--config", config_path, "experiment config JSON")->required();
    cmd_exp->add_option("--seed", seed, "override the config's master seed");
    cmd_exp->add_option("--out", out_path, "records file (default stdout)");
    cmd_exp->add_option("--format", format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
    cmd_exp->add_option("--jobs", jobs, "worker threads (0 = hardware)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // any command-line problem is an input error
    }

    if (cmd_gramian->parsed()) {
        const LtiSystem sys = load_system(system_path);
        const GramianSet gs = build_gramians(sys);
        json j;
        j["n"] = sys.n();
        j["m"] = sys.m();
        j["T"] = sys.T;
        j["trace"] = gs.full.trace();
        j["lambda_min"] = metric_eval(gs.full, Metric::MinEig);
        j["lambda_max"] = metric_eval(gs.full, Metric::MaxEig);
        j["W"] = io_detail::matrix_to_json(gs.full);
        emit(j, out_path);
    } else if (cmd_plan->parsed()) {
        const LtiSystem sys = load_system(system_path);
        const SamplingPlan plan =
            make_plan(build_gramians(sys), strategy_from_string(strategy_str));
        json j;
        j["strategy"] = to_string(plan.strategy);
        j["raw"] = std::vector<double>(plan.raw.begin(), plan.raw.end());
        j["probs"] = std::vector<double>(plan.probs.begin(), plan.probs.end());
        emit(j, out_path);
    } else if (cmd_select->parsed()) {
        const LtiSystem sys = load_system(system_path);
        const GramianSet gs = build_gramians(sys);
        const SamplingPlan plan = make_plan(gs, strategy_from_string(strategy_str));
        Rng rng(seed);
        const Selection sel = draw_selection(plan, count, rng);
        json j;
        j["seed"] = seed;
        j["c"] = sel.c;
        j["q"] = sel.unique_count;
        j["indices"] = sel.indices;
        j["counts"] = std::vector<int>(sel.counts.begin(), sel.counts.end());
        j["G"] = io_detail::matrix_to_json(approx_gramian(gs, plan, sel));
        emit(j, out_path);
    } else if (cmd_bound->parsed()) {
        const LtiSystem sys = load_system(system_path);
        const GramianSet gs = build_gramians(sys);
        const Strategy strategy = strategy_from_string(strategy_str);
        double value = 0.0;
        const int c = bound_for(sys, gs, strategy, eps, delta, &value);
        json j;
        j["strategy"] = to_string(strategy);
        j["eps"] = eps;
        j["delta"] = delta;
        j["value"] = value;
        j["c"] = c;
        emit(j, out_path);
    } else if (cmd_greedy->parsed()) {
        const LtiSystem sys = load_system(system_path);
        const GreedyResult res =
            greedy_select(build_gramians(sys), metric_from_string(metric_str), eps);
        json j;
        j["metric"] = metric_str;
        j["eps"] = eps;
        j["order"] = res.order;
        j["c_greedy"] = res.c_greedy;
        j["achieved"] = res.achieved;
        j["target"] = res.target;
        j["reached"] = res.reached;
        emit(j, out_path);
    } else if (cmd_estimate->parsed()) {
        const LtiSystem sys = with_default_noise(load_system(system_path), false);
        const GramianSet gs = build_gramians(sys);
        const Strategy strategy = strategy_from_string(strategy_str);
        const SamplingPlan plan = make_plan(gs, strategy);
        const int c = count > 0 ? count : bound_for(sys, gs, strategy, eps, delta);
        Rng rng(seed);
        const Selection sel = draw_selection(plan, c, rng);
        const ReducedSystem red = build_reduced(sys, plan, sel);
        const Matrix g = approx_gramian(gs, plan, sel);
        const Matrix sigma = ls_covariance(sys.A, red.C_bar, red.R_bar, sys.T);
        const Matrix bound = covariance_bound(red, gs.full, eps);
        json j = reduced_to_json(red);
        j["seed"] = seed;
        j["c"] = c;
        j["q"] = sel.unique_count;
        j["loewner_pass"] = loewner_within(gs.full, g, eps);
        j["sigma_max"] = metric_eval(sigma, Metric::MaxEig);
        j["bound_max"] = metric_eval(bound, Metric::MaxEig);
        emit(j, out_path);
    } else if (cmd_kalman->parsed()) {
        const LtiSystem sys = with_default_noise(load_system(system_path), true);
        const GramianSet gs = build_gramians(sys);
        const Strategy strategy = strategy_from_string(strategy_str);
        const SamplingPlan plan = make_plan(gs, strategy);
        const int c = count > 0 ? count : bound_for(sys, gs, strategy, eps, delta);
        Rng rng(seed);
        const Selection sel = draw_selection(plan, c, rng);
        const ReducedSystem red = build_reduced(sys, plan, sel);
        json j;
        j["seed"] = seed;
        j["c"] = c;
        j["q"] = sel.unique_count;
        j["kept"] = red.kept;
        j["rel_error"] = kalman_compare(sys, red);
        emit(j, out_path);
    } else if (cmd_exp->parsed()) {
        ExperimentConfig cfg = load_config(config_path);
        if (cmd_exp->count("--seed")) cfg.seed = seed;
        if (cmd_exp->count("--jobs")) cfg.jobs = jobs;
        const ExperimentResult result = run_experiment(kind, cfg);
        if (out_path.empty()) {
            if (format == "csv")
                write_records_csv(std::cout, result);
            else
                std::cout << records_to_json(result).dump(2) << '\n';
        } else {
            std::ofstream out(out_path, std::ios::binary);
            if (!out) throw InputError("cannot write '" + out_path + "'");
            if (format == "csv")
                write_records_csv(out, result);
            else
                out << records_to_json(result).dump(2) << '\n';
        }
        print_summary(std::cerr, result);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const randsel::InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const randsel::Error& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
