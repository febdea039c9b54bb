#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iostream>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "randsel/errors.hpp"
#include "randsel/estimator.hpp"
#include "randsel/greedy.hpp"
#include "randsel/lti.hpp"
#include "randsel/rng.hpp"
#include "randsel/sampler.hpp"
#include "randsel/spectral.hpp"

namespace randsel {

// Which approximate Gramian(s) a run evaluates: the importance-weighted sum
// with repetitions, the unweighted one-instance-per-unique-sensor sum, or both.
enum class Variant { WeightedReplacement, UniqueUnweighted, Both };

inline const char* to_string(Variant v) {
    switch (v) {
        case Variant::WeightedReplacement: return "weighted";
        case Variant::UniqueUnweighted: return "unique";
        case Variant::Both: return "both";
    }
    return "?";
}

inline Variant variant_from_string(const std::string& s) {
    if (s == "weighted") return Variant::WeightedReplacement;
    if (s == "unique") return Variant::UniqueUnweighted;
    if (s == "both") return Variant::Both;
    throw InputError("unknown variant '" + s + "' (expected weighted|unique|both)");
}

inline const char* to_string(CDist d) {
    return d == CDist::Uniform ? "uniform" : "normal";
}

inline CDist cdist_from_string(const std::string& s) {
    if (s == "uniform") return CDist::Uniform;
    if (s == "normal") return CDist::Normal;
    throw InputError("unknown c_dist '" + s + "' (expected uniform|normal)");
}

struct ExperimentConfig {
    int n = 30;
    int m = 30;
    int T = 0;  // 0 means T = n
    std::vector<double> eps_grid = default_eps_grid();
    double delta = 0.1;
    int trials = 100;
    Strategy strategy = Strategy::GammaWeights;
    Metric metric = Metric::MinEig;
    std::uint64_t seed = 1;
    Variant variant = Variant::Both;
    bool normalize = true;
    CDist c_dist = CDist::Uniform;
    int jobs = 1;  // 0 means hardware concurrency

    int horizon() const { return T > 0 ? T : n; }

    static std::vector<double> default_eps_grid() {
        std::vector<double> grid;
        for (int i = 0; 10 + 5 * i <= 95; ++i) grid.push_back((10 + 5 * i) / 100.0);
        return grid;
    }

    void validate() const {
        if (n < 1 || m < 1) throw InputError("config: n and m must be >= 1");
        if (T < 0) throw InputError("config: T must be >= 1 (or 0 for T = n)");
        if (trials < 1) throw InputError("config: trials must be >= 1");
        if (!(delta > 0.0 && delta < 1.0)) throw InputError("config: delta must lie in (0,1)");
        if (eps_grid.empty()) throw InputError("config: eps_grid must not be empty");
        double prev = 0.0;
        for (double e : eps_grid) {
            if (!(e > 0.0 && e < 1.0))
                throw InputError("config: eps values must lie in (0,1)");
            if (e <= prev) throw InputError("config: eps_grid must be strictly increasing");
            prev = e;
        }
        if (jobs < 0) throw InputError("config: jobs must be >= 0");
    }
};

// One Monte Carlo observation. The runners fill the fields that apply to
// their experiment and leave the rest at their defaults (NaN / -1).
struct TrialRecord {
    double eps = std::numeric_limits<double>::quiet_NaN();
    int eps_index = -1;
    int trial = -1;              // -1 marks a deterministic control row
    std::string variant;         // weighted | unique | greedy | control
    int c = -1;
    int q = -1;
    double expected_unique = std::numeric_limits<double>::quiet_NaN();
    double lambda_min_w = std::numeric_limits<double>::quiet_NaN();
    double lambda_max_w = std::numeric_limits<double>::quiet_NaN();
    double trace_w = std::numeric_limits<double>::quiet_NaN();
    double lambda_min_g = std::numeric_limits<double>::quiet_NaN();
    double lambda_max_g = std::numeric_limits<double>::quiet_NaN();
    double trace_g = std::numeric_limits<double>::quiet_NaN();
    int loewner_pass = -1;
    std::string metric;
    int c_greedy = -1;
    double ratio_greedy = std::numeric_limits<double>::quiet_NaN();
    double ratio_weighted = std::numeric_limits<double>::quiet_NaN();
    double ratio_unique = std::numeric_limits<double>::quiet_NaN();
    double sigma_max = std::numeric_limits<double>::quiet_NaN();
    double bound_max = std::numeric_limits<double>::quiet_NaN();
    int dominated = -1;
    int converged = -1;
    double rel_error = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t master_seed = 0;
    std::uint64_t trial_seed = 0;
};

struct EpsSummary {
    double eps = 0.0;
    std::vector<std::pair<std::string, double>> stats;
};

struct ExperimentResult {
    std::string kind;
    std::vector<TrialRecord> records;
    std::vector<EpsSummary> summary;
    int regenerated_systems = 0;
    std::uint64_t master_seed = 0;
};

namespace tags {
inline constexpr std::uint64_t kSystem = 0;
inline constexpr std::uint64_t kValidation = 1;
inline constexpr std::uint64_t kGreedy = 2;
inline constexpr std::uint64_t kEstimation = 3;
inline constexpr std::uint64_t kKalman = 4;
}  // namespace tags

// Runs body(0..count-1), possibly on several threads. Any exception from a
// body is rethrown on the caller's thread after all workers stop.
inline void parallel_for(int jobs, int count, const std::function<void(int)>& body) {
    if (count <= 0) return;
    int nthreads = jobs == 0 ? static_cast<int>(std::thread::hardware_concurrency()) : jobs;
    nthreads = std::max(1, std::min(nthreads, count));
    if (nthreads == 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }

    std::atomic<int> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    auto worker = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

struct GeneratedSystem {
    LtiSystem sys;
    GramianSet gramians;
    int attempts = 1;  // > 1 when unobservable draws had to be regenerated
};

// Draws the experiment's plant. Unobservable realizations (singular W) are
// regenerated with the next sub-seed and logged; they are vanishingly rare in
// this family but never silently dropped.
inline GeneratedSystem generate_experiment_system(const ExperimentConfig& cfg) {
    constexpr int kMaxAttempts = 64;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        const std::uint64_t seed = derive_seed(cfg.seed, tags::kSystem, 0, attempt);
        LtiSystem sys = random_canonical_system(cfg.n, cfg.m, seed, {-1.0, 0.0},
                                                {0.0, 1.0}, cfg.c_dist);
        sys.T = cfg.horizon();
        sys.Q = Matrix::Identity(cfg.n, cfg.n);
        sys.R = Matrix::Identity(cfg.m, cfg.m);
        if (cfg.normalize) sys = normalize_dynamics(sys);

        GramianSet gs = build_gramians(sys);
        const Vector evals = detail::sym_eig(gs.full).eigenvalues();
        if (evals.minCoeff() > kPdTol * evals.cwiseAbs().maxCoeff())
            return {std::move(sys), std::move(gs), attempt + 1};

        std::cerr << "randsel: generated system is unobservable (attempt " << attempt
                  << "), regenerating with next sub-seed\n";
    }
    throw Error("generate_experiment_system: no observable system in 64 attempts");
}

namespace detail {

inline double median(std::vector<double> values) {
    values.erase(std::remove_if(values.begin(), values.end(),
                                [](double v) { return std::isnan(v); }),
                 values.end());
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(values.begin(), values.end());
    const std::size_t k = values.size() / 2;
    return values.size() % 2 ? values[k] : 0.5 * (values[k - 1] + values[k]);
}

inline std::pair<double, double> mean_std(const std::vector<double>& values) {
    if (values.empty()) return {std::numeric_limits<double>::quiet_NaN(),
                                std::numeric_limits<double>::quiet_NaN()};
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= values.size();
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var = values.size() > 1 ? var / (values.size() - 1) : 0.0;
    return {mean, std::sqrt(var)};
}

// Each metric is paired with the sampling distribution whose guarantee
// covers it: trace and max-eigenvalue have their own sharp distributions,
// everything else rides on the Loewner sandwich.
inline Strategy strategy_for_metric(Metric metric) {
    switch (metric) {
        case Metric::Trace: return Strategy::TraceWeights;
        case Metric::MaxEig: return Strategy::MaxEigWeights;
        default: return Strategy::GammaWeights;
    }
}

inline void sort_records(std::vector<TrialRecord>& records) {
    std::stable_sort(records.begin(), records.end(),
                     [](const TrialRecord& a, const TrialRecord& b) {
                         if (a.eps_index != b.eps_index) return a.eps_index < b.eps_index;
                         if (a.trial != b.trial) return a.trial < b.trial;
                         return a.variant < b.variant;
                     });
}

}  // namespace detail

// Validation study: for each epsilon, c comes from the Loewner-sandwich
// sample bound, trials are drawn under the gamma distribution, and both
// variants' Gramian metrics are recorded together with the unique-sensor
// statistics.
inline ExperimentResult run_validation(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentResult result;
    result.kind = "validation";
    result.master_seed = cfg.seed;

    GeneratedSystem gen = generate_experiment_system(cfg);
    result.regenerated_systems = gen.attempts - 1;
    const GramianSet& gs = gen.gramians;
    const GammaScores scores = gamma_scores(gs);

    SamplingPlan plan;
    plan.strategy = Strategy::GammaWeights;
    plan.raw = scores.gamma;
    plan.probs = scores.gamma / scores.gamma.sum();

    const double lmin_w = metric_eval(gs.full, Metric::MinEig);
    const double lmax_w = metric_eval(gs.full, Metric::MaxEig);
    const double trace_w = gs.full.trace();

    const int n_eps = static_cast<int>(cfg.eps_grid.size());
    std::vector<int> c_per_eps(n_eps);
    std::vector<double> expq_per_eps(n_eps);
    for (int e = 0; e < n_eps; ++e) {
        c_per_eps[e] = sample_bound_loewner(scores, cfg.n, cfg.eps_grid[e], cfg.delta);
        expq_per_eps[e] = expected_unique(plan, c_per_eps[e]);
    }

    std::vector<Variant> variants;
    if (cfg.variant == Variant::Both)
        variants = {Variant::WeightedReplacement, Variant::UniqueUnweighted};
    else
        variants = {cfg.variant};
    const int nv = static_cast<int>(variants.size());

    result.records.resize(static_cast<std::size_t>(n_eps) * cfg.trials * nv);
    parallel_for(cfg.jobs, n_eps * cfg.trials, [&](int flat) {
        const int e = flat / cfg.trials;
        const int t = flat % cfg.trials;
        const std::uint64_t trial_seed = derive_seed(cfg.seed, tags::kValidation, e, t);
        Rng rng(trial_seed);
        const Selection sel = draw_selection(plan, c_per_eps[e], rng);

        for (int v = 0; v < nv; ++v) {
            const Matrix g = variants[v] == Variant::WeightedReplacement
                                 ? approx_gramian(gs, plan, sel)
                                 : unique_gramian(gs, sel);
            TrialRecord rec;
            rec.eps = cfg.eps_grid[e];
            rec.eps_index = e;
            rec.trial = t;
            rec.variant = to_string(variants[v]);
            rec.c = c_per_eps[e];
            rec.q = sel.unique_count;
            rec.expected_unique = expq_per_eps[e];
            rec.lambda_min_w = lmin_w;
            rec.lambda_max_w = lmax_w;
            rec.trace_w = trace_w;
            rec.lambda_min_g = metric_eval(g, Metric::MinEig);
            rec.lambda_max_g = metric_eval(g, Metric::MaxEig);
            rec.trace_g = g.trace();
            rec.loewner_pass = loewner_within(gs.full, g, cfg.eps_grid[e]) ? 1 : 0;
            rec.master_seed = cfg.seed;
            rec.trial_seed = trial_seed;
            result.records[static_cast<std::size_t>(flat) * nv + v] = std::move(rec);
        }
    });
    detail::sort_records(result.records);

    for (int e = 0; e < n_eps; ++e) {
        EpsSummary row;
        row.eps = cfg.eps_grid[e];
        row.stats.emplace_back("c", c_per_eps[e]);
        row.stats.emplace_back("expected_unique", expq_per_eps[e]);
        for (Variant v : variants) {
            std::vector<double> rmin, rmax, rtrace, qvals;
            double pass = 0.0, count = 0.0;
            for (const TrialRecord& rec : result.records) {
                if (rec.eps_index != e || rec.variant != to_string(v)) continue;
                rmin.push_back(rec.lambda_min_g / rec.lambda_min_w);
                rmax.push_back(rec.lambda_max_g / rec.lambda_max_w);
                rtrace.push_back(rec.trace_g / rec.trace_w);
                qvals.push_back(rec.q);
                pass += rec.loewner_pass;
                count += 1.0;
            }
            const std::string p = std::string(to_string(v)) + ".";
            const auto [m1, s1] = detail::mean_std(rmin);
            const auto [m2, s2] = detail::mean_std(rmax);
            const auto [m3, s3] = detail::mean_std(rtrace);
            const auto [mq, sq] = detail::mean_std(qvals);
            row.stats.emplace_back(p + "min_ratio_mean", m1);
            row.stats.emplace_back(p + "min_ratio_std", s1);
            row.stats.emplace_back(p + "max_ratio_mean", m2);
            row.stats.emplace_back(p + "max_ratio_std", s2);
            row.stats.emplace_back(p + "trace_ratio_mean", m3);
            row.stats.emplace_back(p + "trace_ratio_std", s3);
            row.stats.emplace_back(p + "unique_mean", mq);
            row.stats.emplace_back(p + "unique_std", sq);
            row.stats.emplace_back(p + "loewner_rate", count > 0 ? pass / count : 0.0);
        }
        result.summary.push_back(std::move(row));
    }
    return result;
}

// Greedy comparison: per epsilon, the greedy scan fixes the sensor budget
// c_greedy, and both randomized variants are run with the same budget under
// the distribution matched to the configured metric.
inline ExperimentResult run_greedy_comparison(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentResult result;
    result.kind = "greedy";
    result.master_seed = cfg.seed;

    GeneratedSystem gen = generate_experiment_system(cfg);
    result.regenerated_systems = gen.attempts - 1;
    const GramianSet& gs = gen.gramians;
    const SamplingPlan plan = make_plan(gs, detail::strategy_for_metric(cfg.metric));
    const double metric_w = metric_eval(gs.full, cfg.metric);

    const int n_eps = static_cast<int>(cfg.eps_grid.size());
    std::vector<GreedyResult> greedy_per_eps(n_eps);
    for (int e = 0; e < n_eps; ++e)
        greedy_per_eps[e] = greedy_select(gs, cfg.metric, cfg.eps_grid[e]);

    auto ratio_of = [&](const Matrix& g) {
        try {
            return metric_eval(g, cfg.metric) / metric_w;
        } catch (const SingularError&) {
            return std::numeric_limits<double>::quiet_NaN();
        }
    };

    result.records.resize(static_cast<std::size_t>(n_eps) * cfg.trials);
    parallel_for(cfg.jobs, n_eps * cfg.trials, [&](int flat) {
        const int e = flat / cfg.trials;
        const int t = flat % cfg.trials;
        const std::uint64_t trial_seed = derive_seed(cfg.seed, tags::kGreedy, e, t);
        Rng rng(trial_seed);
        const Selection sel = draw_selection(plan, greedy_per_eps[e].c_greedy, rng);

        TrialRecord rec;
        rec.eps = cfg.eps_grid[e];
        rec.eps_index = e;
        rec.trial = t;
        rec.variant = "both";
        rec.metric = to_string(cfg.metric);
        rec.c = greedy_per_eps[e].c_greedy;
        rec.q = sel.unique_count;
        rec.c_greedy = greedy_per_eps[e].c_greedy;
        rec.ratio_greedy = greedy_per_eps[e].achieved / metric_w;
        rec.ratio_weighted = ratio_of(approx_gramian(gs, plan, sel));
        rec.ratio_unique = ratio_of(unique_gramian(gs, sel));
        rec.master_seed = cfg.seed;
        rec.trial_seed = trial_seed;
        result.records[flat] = std::move(rec);
    });
    detail::sort_records(result.records);

    for (int e = 0; e < n_eps; ++e) {
        std::vector<double> rw, ru;
        for (const TrialRecord& rec : result.records) {
            if (rec.eps_index != e) continue;
            rw.push_back(rec.ratio_weighted);
            ru.push_back(rec.ratio_unique);
        }
        EpsSummary row;
        row.eps = cfg.eps_grid[e];
        row.stats.emplace_back("c_greedy", greedy_per_eps[e].c_greedy);
        row.stats.emplace_back("ratio_greedy", greedy_per_eps[e].achieved / metric_w);
        row.stats.emplace_back("weighted_median", detail::median(rw));
        row.stats.emplace_back("unique_median", detail::median(ru));
        result.summary.push_back(std::move(row));
    }
    return result;
}

// Estimation study: per epsilon, build the reduced system, compare the
// least-squares covariance against its high-probability upper bound, and
// keep a Pi = I control row for reference.
inline ExperimentResult run_estimation_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentResult result;
    result.kind = "estimation";
    result.master_seed = cfg.seed;

    GeneratedSystem gen = generate_experiment_system(cfg);
    result.regenerated_systems = gen.attempts - 1;
    const LtiSystem& sys = gen.sys;
    const GramianSet& gs = gen.gramians;
    const GammaScores scores = gamma_scores(gs);
    const SamplingPlan plan = make_plan(gs, cfg.strategy);

    const int n_eps = static_cast<int>(cfg.eps_grid.size());
    std::vector<int> c_per_eps(n_eps);
    for (int e = 0; e < n_eps; ++e)
        c_per_eps[e] = cfg.strategy == Strategy::MaxEigWeights
                           ? sample_bound_maxeig(gs, cfg.eps_grid[e], cfg.delta)
                           : sample_bound_loewner(scores, cfg.n, cfg.eps_grid[e], cfg.delta);

    const SamplingPlan uniform_plan = make_plan(gs, Strategy::Uniform);
    const Matrix sigma_full = ls_covariance(sys.A, sys.C, *sys.R, sys.T);

    // trial == -1 rows: the full-selection control per epsilon.
    std::vector<TrialRecord> controls;
    for (int e = 0; e < n_eps; ++e) {
        ReducedSystem identity;
        identity.Pi = Matrix::Identity(cfg.m, cfg.m);
        identity.C_bar = sys.C;
        identity.R_bar = *sys.R;
        identity.kept.resize(cfg.m);
        for (int k = 0; k < cfg.m; ++k) identity.kept[k] = k;

        const Matrix bound = covariance_bound(identity, gs.full, cfg.eps_grid[e]);
        TrialRecord rec;
        rec.eps = cfg.eps_grid[e];
        rec.eps_index = e;
        rec.trial = -1;
        rec.variant = "control";
        rec.c = cfg.m;
        rec.q = cfg.m;
        rec.loewner_pass = 1;
        rec.sigma_max = metric_eval(sigma_full, Metric::MaxEig);
        rec.bound_max = metric_eval(bound, Metric::MaxEig);
        const double excess =
            detail::sym_eig(sigma_full - bound).eigenvalues().maxCoeff();
        rec.dominated = excess <= 1e-8 * spectral_norm_sym(bound) ? 1 : 0;
        rec.master_seed = cfg.seed;
        rec.trial_seed = derive_seed(cfg.seed, tags::kEstimation, e, 0xFFFFFFFFull);
        controls.push_back(std::move(rec));
    }

    std::vector<TrialRecord> trials(static_cast<std::size_t>(n_eps) * cfg.trials);
    parallel_for(cfg.jobs, n_eps * cfg.trials, [&](int flat) {
        const int e = flat / cfg.trials;
        const int t = flat % cfg.trials;
        const std::uint64_t trial_seed = derive_seed(cfg.seed, tags::kEstimation, e, t);
        Rng rng(trial_seed);
        const Selection sel = draw_selection(plan, c_per_eps[e], rng);

        TrialRecord rec;
        rec.eps = cfg.eps_grid[e];
        rec.eps_index = e;
        rec.trial = t;
        rec.variant = "weighted";
        rec.c = c_per_eps[e];
        rec.q = sel.unique_count;
        rec.master_seed = cfg.seed;
        rec.trial_seed = trial_seed;
        try {
            const Matrix g = approx_gramian(gs, plan, sel);
            rec.loewner_pass = loewner_within(gs.full, g, cfg.eps_grid[e]) ? 1 : 0;
            const ReducedSystem red = build_reduced(sys, plan, sel);
            const Matrix sigma = ls_covariance(sys.A, red.C_bar, red.R_bar, sys.T);
            const Matrix bound = covariance_bound(red, gs.full, cfg.eps_grid[e]);
            rec.sigma_max = metric_eval(sigma, Metric::MaxEig);
            rec.bound_max = metric_eval(bound, Metric::MaxEig);
            const double excess =
                detail::sym_eig(sigma - bound).eigenvalues().maxCoeff();
            rec.dominated = excess <= 1e-8 * spectral_norm_sym(bound) ? 1 : 0;
        } catch (const SingularError&) {
            // Singular sampled Gramian: a failed trial, counted against the
            // 1 - delta budget.
            rec.loewner_pass = 0;
            rec.dominated = 0;
        }
        trials[flat] = std::move(rec);
    });

    result.records = std::move(controls);
    result.records.insert(result.records.end(), std::make_move_iterator(trials.begin()),
                          std::make_move_iterator(trials.end()));
    detail::sort_records(result.records);

    for (int e = 0; e < n_eps; ++e) {
        double pass = 0.0, dom = 0.0, dom_count = 0.0, count = 0.0;
        std::vector<double> ratios;
        for (const TrialRecord& rec : result.records) {
            if (rec.eps_index != e || rec.trial < 0) continue;
            count += 1.0;
            pass += rec.loewner_pass == 1;
            if (rec.loewner_pass == 1) {
                dom_count += 1.0;
                dom += rec.dominated == 1;
            }
            if (std::isfinite(rec.sigma_max) && std::isfinite(rec.bound_max))
                ratios.push_back(rec.sigma_max / rec.bound_max);
        }
        EpsSummary row;
        row.eps = cfg.eps_grid[e];
        row.stats.emplace_back("c", c_per_eps[e]);
        row.stats.emplace_back("loewner_rate", count > 0 ? pass / count : 0.0);
        row.stats.emplace_back("domination_rate", dom_count > 0 ? dom / dom_count : 1.0);
        row.stats.emplace_back("sigma_bound_ratio_median", detail::median(ratios));
        result.summary.push_back(std::move(row));
    }
    return result;
}

// Kalman study: per epsilon, solve the reduced steady-state Riccati equation
// and report the relative gap to the full-system covariance.
inline ExperimentResult run_kalman_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentResult result;
    result.kind = "kalman";
    result.master_seed = cfg.seed;

    GeneratedSystem gen = generate_experiment_system(cfg);
    result.regenerated_systems = gen.attempts - 1;
    const LtiSystem& sys = gen.sys;
    const GramianSet& gs = gen.gramians;
    const GammaScores scores = gamma_scores(gs);
    const SamplingPlan plan = make_plan(gs, cfg.strategy);

    const int n_eps = static_cast<int>(cfg.eps_grid.size());
    std::vector<int> c_per_eps(n_eps);
    for (int e = 0; e < n_eps; ++e)
        c_per_eps[e] = cfg.strategy == Strategy::MaxEigWeights
                           ? sample_bound_maxeig(gs, cfg.eps_grid[e], cfg.delta)
                           : sample_bound_loewner(scores, cfg.n, cfg.eps_grid[e], cfg.delta);

    const RiccatiSolution full = solve_dare(sys.A, sys.C, *sys.Q, *sys.R);

    // Control rows: the Pi = I subsystem is the plant itself, so the two
    // Riccati solves coincide and the gap is exactly zero.
    std::vector<TrialRecord> controls;
    for (int e = 0; e < n_eps; ++e) {
        const RiccatiSolution again = solve_dare(sys.A, sys.C, *sys.Q, *sys.R);
        TrialRecord rec;
        rec.eps = cfg.eps_grid[e];
        rec.eps_index = e;
        rec.trial = -1;
        rec.variant = "control";
        rec.c = cfg.m;
        rec.q = cfg.m;
        rec.converged = 1;
        rec.rel_error = spectral_norm_sym(again.P - full.P) / spectral_norm_sym(full.P);
        rec.master_seed = cfg.seed;
        rec.trial_seed = derive_seed(cfg.seed, tags::kKalman, e, 0xFFFFFFFFull);
        controls.push_back(std::move(rec));
    }

    std::vector<TrialRecord> trials(static_cast<std::size_t>(n_eps) * cfg.trials);
    parallel_for(cfg.jobs, n_eps * cfg.trials, [&](int flat) {
        const int e = flat / cfg.trials;
        const int t = flat % cfg.trials;
        const std::uint64_t trial_seed = derive_seed(cfg.seed, tags::kKalman, e, t);
        Rng rng(trial_seed);
        const Selection sel = draw_selection(plan, c_per_eps[e], rng);

        TrialRecord rec;
        rec.eps = cfg.eps_grid[e];
        rec.eps_index = e;
        rec.trial = t;
        rec.variant = "weighted";
        rec.c = c_per_eps[e];
        rec.q = sel.unique_count;
        rec.master_seed = cfg.seed;
        rec.trial_seed = trial_seed;
        try {
            const ReducedSystem red = build_reduced(sys, plan, sel);
            const RiccatiSolution reduced = solve_dare(sys.A, red.C_bar, *sys.Q, red.R_bar);
            rec.converged = 1;
            rec.rel_error =
                spectral_norm_sym(reduced.P - full.P) / spectral_norm_sym(full.P);
        } catch (const ConvergenceError&) {
            rec.converged = 0;
        }
        trials[flat] = std::move(rec);
    });

    result.records = std::move(controls);
    result.records.insert(result.records.end(), std::make_move_iterator(trials.begin()),
                          std::make_move_iterator(trials.end()));
    detail::sort_records(result.records);

    for (int e = 0; e < n_eps; ++e) {
        std::vector<double> errors;
        double conv = 0.0, count = 0.0;
        for (const TrialRecord& rec : result.records) {
            if (rec.eps_index != e || rec.trial < 0) continue;
            count += 1.0;
            conv += rec.converged == 1;
            errors.push_back(rec.rel_error);
        }
        EpsSummary row;
        row.eps = cfg.eps_grid[e];
        row.stats.emplace_back("c", c_per_eps[e]);
        row.stats.emplace_back("rel_error_median", detail::median(errors));
        row.stats.emplace_back("converged_rate", count > 0 ? conv / count : 0.0);
        result.summary.push_back(std::move(row));
    }
    return result;
}

inline ExperimentResult run_experiment(const std::string& kind, const ExperimentConfig& cfg) {
    if (kind == "validation") return run_validation(cfg);
    if (kind == "greedy") return run_greedy_comparison(cfg);
    if (kind == "estimation") return run_estimation_experiment(cfg);
    if (kind == "kalman") return run_kalman_experiment(cfg);
    throw InputError("unknown experiment '" + kind +
                     "' (expected validation|greedy|estimation|kalman)");
}

}  // namespace randsel
