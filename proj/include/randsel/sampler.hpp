#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "randsel/errors.hpp"
#include "randsel/lti.hpp"
#include "randsel/rng.hpp"
#include "randsel/spectral.hpp"

namespace randsel {

// Importance distributions over sensors. MaxEigWeights and TraceWeights back
// the single-metric guarantees; GammaWeights backs the two-sided Loewner
// sandwich and therefore every eigenvalue-based metric at once.
enum class Strategy { MaxEigWeights, TraceWeights, GammaWeights, Uniform };

inline const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::MaxEigWeights: return "maxeig";
        case Strategy::TraceWeights: return "trace";
        case Strategy::GammaWeights: return "gamma";
        case Strategy::Uniform: return "uniform";
    }
    return "?";
}

inline Strategy strategy_from_string(const std::string& s) {
    if (s == "maxeig") return Strategy::MaxEigWeights;
    if (s == "trace") return Strategy::TraceWeights;
    if (s == "gamma") return Strategy::GammaWeights;
    if (s == "uniform") return Strategy::Uniform;
    throw InputError("unknown strategy '" + s +
                     "' (expected maxeig|trace|gamma|uniform)");
}

struct SamplingPlan {
    Strategy strategy = Strategy::Uniform;
    Vector raw;    // unnormalized weights, one per sensor
    Vector probs;  // raw / sum(raw)

    int sensor_count() const { return static_cast<int>(probs.size()); }
};

// Outcome of c categorical draws with replacement.
struct Selection {
    std::vector<int> indices;  // j_1 .. j_c in draw order
    Eigen::VectorXi counts;    // multiplicity n_i per sensor
    int c = 0;
    int unique_count = 0;      // q = |{i : n_i > 0}|
};

inline SamplingPlan make_plan(const GramianSet& gs, Strategy strategy,
                              double pd_tol = kPdTol) {
    const int m = gs.sensor_count();
    if (m < 1) throw InputError("make_plan: empty Gramian set");

    SamplingPlan plan;
    plan.strategy = strategy;
    plan.raw.resize(m);
    switch (strategy) {
        case Strategy::MaxEigWeights:
            for (int k = 0; k < m; ++k)
                plan.raw(k) = std::max(0.0, metric_eval(gs.per_sensor[k], Metric::MaxEig));
            break;
        case Strategy::TraceWeights:
            for (int k = 0; k < m; ++k)
                plan.raw(k) = std::max(0.0, gs.per_sensor[k].trace());
            break;
        case Strategy::GammaWeights:
            plan.raw = gamma_scores(gs, pd_tol).gamma;
            break;
        case Strategy::Uniform:
            plan.raw.setOnes();
            break;
    }

    const double total = plan.raw.sum();
    if (!(total > 0.0))
        throw InputError("make_plan: degenerate distribution, all weights are zero");
    plan.probs = plan.raw / total;
    return plan;
}

// c i.i.d. draws by inverse-CDF lookup on the cumulative weights; O(log m)
// per draw and fully determined by the rng stream.
inline Selection draw_selection(const SamplingPlan& plan, int c, Rng& rng) {
    const int m = plan.sensor_count();
    if (m < 1) throw InputError("draw_selection: empty plan");
    if (c < 1) throw InputError("draw_selection: sample count must be >= 1");

    std::vector<double> cum(m);
    double acc = 0.0;
    for (int i = 0; i < m; ++i) {
        acc += plan.probs(i);
        cum[i] = acc;
    }
    if (!(acc > 0.0)) throw InputError("draw_selection: plan has zero total mass");

    Selection sel;
    sel.c = c;
    sel.indices.reserve(c);
    sel.counts = Eigen::VectorXi::Zero(m);
    for (int i = 0; i < c; ++i) {
        const double u = rng.uniform01() * acc;  // u < acc, so an index always exists
        const int idx = static_cast<int>(
            std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
        sel.indices.push_back(idx);
        sel.counts(idx) += 1;
    }
    sel.unique_count = static_cast<int>((sel.counts.array() > 0).count());
    return sel;
}

// Every sensor exactly once; the Gamma = I control selection.
inline Selection full_selection(int m) {
    if (m < 1) throw InputError("full_selection: m must be >= 1");
    Selection sel;
    sel.c = m;
    sel.unique_count = m;
    sel.counts = Eigen::VectorXi::Ones(m);
    sel.indices.resize(m);
    for (int i = 0; i < m; ++i) sel.indices[i] = i;
    return sel;
}

// Importance-weighted approximation G = (1/c) sum_i W_{j_i} / p_{j_i},
// accumulated through the multiplicities as (1/c) sum_k (n_k / p_k) W_k.
inline Matrix approx_gramian(const GramianSet& gs, const SamplingPlan& plan,
                             const Selection& sel) {
    const int m = gs.sensor_count();
    if (plan.sensor_count() != m || sel.counts.size() != m)
        throw InputError("approx_gramian: sensor count mismatch");
    if (sel.c < 1) throw InputError("approx_gramian: empty selection");

    Matrix g = Matrix::Zero(gs.dim(), gs.dim());
    for (int k = 0; k < m; ++k) {
        if (sel.counts(k) == 0) continue;
        if (!(plan.probs(k) > 0.0))
            throw Error("approx_gramian: sampled sensor has zero probability");
        g += (static_cast<double>(sel.counts(k)) / (sel.c * plan.probs(k))) *
             gs.per_sensor[k];
    }
    return detail::symmetrized(g);
}

// Unweighted Gramian of the distinct selected sensors (binary Gamma): each
// selected sensor contributes W_k once, repetitions ignored.
inline Matrix unique_gramian(const GramianSet& gs, const Selection& sel) {
    if (sel.counts.size() != gs.sensor_count())
        throw InputError("unique_gramian: sensor count mismatch");
    Matrix g = Matrix::Zero(gs.dim(), gs.dim());
    for (int k = 0; k < gs.sensor_count(); ++k)
        if (sel.counts(k) > 0) g += gs.per_sensor[k];
    return detail::symmetrized(g);
}

namespace detail {

inline void check_eps_delta(double eps, double delta, bool delta_can_be_one) {
    if (!(eps > 0.0 && eps < 1.0))
        throw InputError("sample bound: eps must lie in (0,1)");
    const bool ok = delta > 0.0 && (delta_can_be_one ? delta <= 1.0 : delta < 1.0);
    if (!ok) throw InputError("sample bound: delta out of range");
}

}  // namespace detail

// Pre-ceiling sample count guaranteeing lambda_max(G) >= (1-eps) lambda_max(W)
// with probability 1-delta under MaxEigWeights:
//   c >= 2.7 * (sum_k lambda_max(W_k) / lambda_max(W)) / eps^2 * log(n/delta).
inline double sample_bound_maxeig_value(const GramianSet& gs, double eps, double delta) {
    detail::check_eps_delta(eps, delta, /*delta_can_be_one=*/false);
    double sum_lmax = 0.0;
    for (const Matrix& wk : gs.per_sensor)
        sum_lmax += std::max(0.0, metric_eval(wk, Metric::MaxEig));
    const double lmax_w = metric_eval(gs.full, Metric::MaxEig);
    if (!(lmax_w > 0.0))
        throw InputError("sample_bound_maxeig: Gramian has no positive eigenvalue");
    return 2.7 * sum_lmax / (eps * eps * lmax_w) * std::log(gs.dim() / delta);
}

inline int sample_bound_maxeig(const GramianSet& gs, double eps, double delta) {
    return std::max(1, static_cast<int>(std::ceil(sample_bound_maxeig_value(gs, eps, delta))));
}

// Pre-ceiling sample count for the two-sided sandwich
// (1-eps) W <= G <= (1+eps) W under GammaWeights:
//   c >= 4 * sum_k gamma_k / eps^2 * log(2n/delta).
inline double sample_bound_loewner_value(const GammaScores& scores, int n, double eps,
                                         double delta) {
    detail::check_eps_delta(eps, delta, /*delta_can_be_one=*/true);
    if (n < 1) throw InputError("sample_bound_loewner: n must be >= 1");
    return 4.0 * scores.rho / (eps * eps) * std::log(2.0 * n / delta);
}

inline int sample_bound_loewner(const GammaScores& scores, int n, double eps,
                                double delta) {
    return std::max(1, static_cast<int>(std::ceil(sample_bound_loewner_value(scores, n, eps, delta))));
}

// Expected number of distinct sensors after c draws: m - sum_i (1 - p_i)^c.
inline double expected_unique(const SamplingPlan& plan, int c) {
    if (c < 1) throw InputError("expected_unique: c must be >= 1");
    double sum = 0.0;
    for (int i = 0; i < plan.sensor_count(); ++i)
        sum += std::pow(1.0 - plan.probs(i), c);
    return plan.sensor_count() - sum;
}

}  // namespace randsel
