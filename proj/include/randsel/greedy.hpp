#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

#include "randsel/errors.hpp"
#include "randsel/lti.hpp"
#include "randsel/spectral.hpp"

namespace randsel {

struct GreedyResult {
    std::vector<int> order;  // all sensors, sorted by decreasing per-sensor metric
    int c_greedy = 0;        // sensors taken before the threshold was met
    double achieved = 0.0;   // metric of the cumulative Gramian at the stop
    double target = 0.0;     // (1 - eps) * metric(W)
    bool reached = false;
};

// Sort-once greedy baseline: rank sensors by the metric of their individual
// Gramians (ties broken by lower index), then accumulate in that order until
// the cumulative Gramian's metric reaches (1-eps) times the full value. The
// threshold test is on the cumulative Gramian, not a sum of scores, which is
// what makes it meaningful for MinEig.
inline GreedyResult greedy_select(const GramianSet& gs, Metric metric, double eps) {
    if (!(eps > 0.0 && eps < 1.0))
        throw InputError("greedy_select: eps must lie in (0,1)");
    const int m = gs.sensor_count();
    if (m < 1) throw InputError("greedy_select: empty Gramian set");

    // A singular matrix has no trace-inverse; score it -inf so it sorts last
    // (per sensor) or cannot pass the threshold yet (cumulative).
    auto eval_or_neg_inf = [&](const Matrix& w) {
        try {
            return metric_eval(w, metric);
        } catch (const SingularError&) {
            return -std::numeric_limits<double>::infinity();
        }
    };

    GreedyResult result;
    result.target = (1.0 - eps) * metric_eval(gs.full, metric);

    std::vector<double> scores(m);
    for (int k = 0; k < m; ++k) scores[k] = eval_or_neg_inf(gs.per_sensor[k]);
    result.order.resize(m);
    std::iota(result.order.begin(), result.order.end(), 0);
    std::sort(result.order.begin(), result.order.end(), [&](int a, int b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });

    Matrix cumulative = Matrix::Zero(gs.dim(), gs.dim());
    for (int j = 0; j < m; ++j) {
        cumulative += gs.per_sensor[result.order[j]];
        const double value = eval_or_neg_inf(cumulative);
        result.c_greedy = j + 1;
        result.achieved = value;
        if (value >= result.target) {
            result.reached = true;
            break;
        }
    }
    // Not reaching the target is only possible through numerical slack,
    // since the full sum is W itself; the caller sees reached == false.
    return result;
}

}  // namespace randsel
