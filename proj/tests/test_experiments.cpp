#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "randsel/experiments.hpp"
#include "randsel/io.hpp"

using namespace randsel;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.n = 8;
    cfg.m = 12;
    cfg.eps_grid = {0.3, 0.6};
    cfg.trials = 25;
    cfg.seed = 7;
    return cfg;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, sep)) out.push_back(cell);
    return out;
}

}  // namespace

TEST_CASE("validation record count follows |eps| x trials x variants") {
    ExperimentConfig cfg = small_config();
    cfg.trials = 1;
    cfg.variant = Variant::WeightedReplacement;
    CHECK(run_validation(cfg).records.size() == 2);

    cfg.variant = Variant::Both;
    cfg.trials = 3;
    CHECK(run_validation(cfg).records.size() == 2 * 3 * 2);
}

TEST_CASE("experiments replay byte-identically for any job count") {
    ExperimentConfig cfg = small_config();
    cfg.jobs = 1;
    const std::string serial = records_csv_string(run_validation(cfg));
    cfg.jobs = 4;
    CHECK(records_csv_string(run_validation(cfg)) == serial);
    cfg.jobs = 0;  // hardware concurrency
    CHECK(records_csv_string(run_validation(cfg)) == serial);

    ExperimentConfig kcfg = small_config();
    kcfg.trials = 5;
    kcfg.jobs = 1;
    const std::string kal = records_csv_string(run_kalman_experiment(kcfg));
    const std::string est = records_csv_string(run_estimation_experiment(kcfg));
    kcfg.jobs = 3;
    CHECK(records_csv_string(run_kalman_experiment(kcfg)) == kal);
    CHECK(records_csv_string(run_estimation_experiment(kcfg)) == est);
}

TEST_CASE("different master seeds give different draws") {
    ExperimentConfig cfg = small_config();
    const std::string a = records_csv_string(run_validation(cfg));
    cfg.seed = 8;
    CHECK(records_csv_string(run_validation(cfg)) != a);
}

TEST_CASE("validation meets the Loewner budget and tracks unique counts") {
    ExperimentConfig cfg;
    cfg.n = 10;
    cfg.m = 20;
    cfg.eps_grid = {0.5};
    cfg.trials = 100;
    cfg.seed = 11;
    cfg.variant = Variant::WeightedReplacement;
    const ExperimentResult result = run_validation(cfg);

    int pass = 0;
    double q_sum = 0.0, q_sumsq = 0.0;
    double expected_q = 0.0;
    for (const TrialRecord& rec : result.records) {
        pass += rec.loewner_pass == 1;
        q_sum += rec.q;
        q_sumsq += static_cast<double>(rec.q) * rec.q;
        expected_q = rec.expected_unique;
    }
    CHECK(pass >= 90);  // delta = 0.1

    const double mean = q_sum / cfg.trials;
    const double var = (q_sumsq / cfg.trials - mean * mean) * cfg.trials / (cfg.trials - 1.0);
    const double se = std::sqrt(std::max(var, 1e-12) / cfg.trials);
    CHECK(std::abs(mean - expected_q) <= 4.0 * se);

    SECTION("summary exposes mean and std per eps") {
        REQUIRE(result.summary.size() == 1);
        bool has_mean = false, has_std = false;
        for (const auto& [key, value] : result.summary[0].stats) {
            has_mean |= key == "weighted.min_ratio_mean";
            has_std |= key == "weighted.min_ratio_std";
        }
        CHECK(has_mean);
        CHECK(has_std);
    }
}

TEST_CASE("greedy comparison records all three methods") {
    ExperimentConfig cfg = small_config();
    cfg.metric = Metric::Trace;
    cfg.trials = 10;
    const ExperimentResult result = run_greedy_comparison(cfg);
    REQUIRE(result.records.size() == 2 * 10);
    for (const TrialRecord& rec : result.records) {
        CHECK(rec.c_greedy >= 1);
        CHECK(rec.c_greedy <= cfg.m);
        CHECK(rec.ratio_greedy >= (1.0 - rec.eps) - 1e-9);
        // Trace weights make the weighted ratio exactly one on every draw.
        CHECK(rec.ratio_weighted == Catch::Approx(1.0).epsilon(1e-10));
        CHECK(rec.ratio_unique <= 1.0 + 1e-9);
        CHECK(rec.metric == "trace");
    }
}

TEST_CASE("near-one eps makes every method exceed the target") {
    ExperimentConfig cfg = small_config();
    cfg.eps_grid = {0.99};
    cfg.trials = 5;
    cfg.metric = Metric::MinEig;
    const ExperimentResult result = run_greedy_comparison(cfg);
    for (const TrialRecord& rec : result.records) {
        CHECK(rec.ratio_greedy >= 0.01 - 1e-12);
        CHECK(rec.ratio_weighted >= 0.01 - 1e-12);
        CHECK(rec.c_greedy == 1);
    }
}

TEST_CASE("estimation experiment: control row and domination") {
    ExperimentConfig cfg;
    cfg.n = 6;
    cfg.m = 10;
    cfg.eps_grid = {0.5};
    cfg.trials = 40;
    cfg.seed = 23;
    const ExperimentResult result = run_estimation_experiment(cfg);

    int controls = 0, loewner_passes = 0, below_bound = 0;
    for (const TrialRecord& rec : result.records) {
        if (rec.trial < 0) {
            ++controls;
            CHECK(rec.variant == "control");
            CHECK(rec.sigma_max < rec.bound_max);  // bound is loose at Pi = I
            CHECK(rec.dominated == 1);
            continue;
        }
        below_bound += rec.sigma_max < rec.bound_max;
        if (rec.loewner_pass == 1) {
            ++loewner_passes;
            CHECK(rec.dominated == 1);  // the covariance bound holds per trial
        }
    }
    CHECK(controls == 1);
    CHECK(loewner_passes >= 36);  // 90% of 40
    CHECK(below_bound >= 36);     // lambda_max ratio below one in >= 90% of trials
}

TEST_CASE("kalman experiment: exact control zero and rising trend") {
    ExperimentConfig cfg;
    cfg.n = 10;
    cfg.m = 60;
    cfg.eps_grid = {0.3, 0.7};
    cfg.trials = 50;
    cfg.seed = 3;
    cfg.jobs = 0;
    const ExperimentResult result = run_kalman_experiment(cfg);

    std::vector<double> low, high;
    for (const TrialRecord& rec : result.records) {
        if (rec.trial < 0) {
            CHECK(rec.rel_error == 0.0);  // Pi = I reproduces the plant exactly
            continue;
        }
        CHECK(rec.converged == 1);
        (rec.eps_index == 0 ? low : high).push_back(rec.rel_error);
    }
    REQUIRE(low.size() == 50);
    REQUIRE(high.size() == 50);
    std::sort(low.begin(), low.end());
    std::sort(high.begin(), high.end());
    CHECK(low[25] < high[25]);  // median gap grows with eps
}

TEST_CASE("CSV output parses back with the documented schema") {
    ExperimentConfig cfg = small_config();
    cfg.trials = 4;
    const ExperimentResult result = run_validation(cfg);
    const std::string csv = records_csv_string(result);

    std::istringstream in(csv);
    std::string header;
    REQUIRE(std::getline(in, header));
    const auto columns = split(header, ',');
    CHECK(columns == csv_columns("validation"));

    int rows = 0;
    std::string line;
    while (std::getline(in, line)) {
        const auto cells = split(line, ',');
        REQUIRE(cells.size() == columns.size());
        // eps round-trips as a double, seeds as unsigned integers.
        CHECK_NOTHROW(std::stod(cells[0]));
        CHECK_NOTHROW(std::stoull(cells.back()));
        ++rows;
    }
    CHECK(rows == static_cast<int>(result.records.size()));
}

TEST_CASE("experiment dispatch rejects unknown kinds") {
    CHECK_THROWS_AS(run_experiment("nope", small_config()), InputError);
}
