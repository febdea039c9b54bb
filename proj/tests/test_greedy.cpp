#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>
#include <vector>

#include "randsel/greedy.hpp"
#include "randsel/lti.hpp"

using namespace randsel;

namespace {

LtiSystem observable_system(int n, int m, std::uint64_t seed) {
    LtiSystem sys = random_canonical_system(n, m, seed);
    sys.T = n;
    return sys;
}

GramianSet identical_sensor_set(int copies) {
    LtiSystem base = observable_system(3, 1, 44);
    LtiSystem sys;
    sys.A = base.A;
    sys.C = base.C.row(0).replicate(copies, 1);
    sys.T = base.T;
    return build_gramians(sys);
}

// Independent re-implementation of the sorted prefix scan.
int scan_oracle(const GramianSet& gs, Metric metric, double eps) {
    const int m = gs.sensor_count();
    std::vector<double> score(m);
    for (int k = 0; k < m; ++k) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(gs.per_sensor[k], Eigen::EigenvaluesOnly);
        switch (metric) {
            case Metric::MinEig: score[k] = es.eigenvalues().minCoeff(); break;
            case Metric::MaxEig: score[k] = es.eigenvalues().maxCoeff(); break;
            case Metric::Trace: score[k] = gs.per_sensor[k].trace(); break;
            case Metric::TraceInv: score[k] = es.eigenvalues().cwiseInverse().sum(); break;
        }
    }
    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return score[a] > score[b]; });

    Eigen::SelfAdjointEigenSolver<Matrix> full(gs.full, Eigen::EigenvaluesOnly);
    double target = 0.0;
    switch (metric) {
        case Metric::MinEig: target = (1 - eps) * full.eigenvalues().minCoeff(); break;
        case Metric::MaxEig: target = (1 - eps) * full.eigenvalues().maxCoeff(); break;
        case Metric::Trace: target = (1 - eps) * gs.full.trace(); break;
        case Metric::TraceInv:
            target = (1 - eps) * full.eigenvalues().cwiseInverse().sum();
            break;
    }

    Matrix acc = Matrix::Zero(gs.dim(), gs.dim());
    for (int j = 0; j < m; ++j) {
        acc += gs.per_sensor[order[j]];
        Eigen::SelfAdjointEigenSolver<Matrix> es(acc, Eigen::EigenvaluesOnly);
        double value = 0.0;
        switch (metric) {
            case Metric::MinEig: value = es.eigenvalues().minCoeff(); break;
            case Metric::MaxEig: value = es.eigenvalues().maxCoeff(); break;
            case Metric::Trace: value = acc.trace(); break;
            case Metric::TraceInv: value = es.eigenvalues().cwiseInverse().sum(); break;
        }
        if (value >= target) return j + 1;
    }
    return m;
}

}  // namespace

TEST_CASE("near-one eps needs a single sensor") {
    const GramianSet gs = build_gramians(observable_system(4, 7, 3));
    for (Metric metric : {Metric::MinEig, Metric::MaxEig, Metric::Trace}) {
        const GreedyResult res = greedy_select(gs, metric, 0.999);
        CHECK(res.c_greedy == 1);
        CHECK(res.reached);
    }
}

TEST_CASE("identical sensors need ceil(m/2) of the trace at eps = 0.5") {
    const GramianSet gs = identical_sensor_set(5);
    const GreedyResult res = greedy_select(gs, Metric::Trace, 0.5);
    CHECK(res.c_greedy == 3);
    CHECK(res.reached);
    CHECK(res.achieved >= res.target);
}

TEST_CASE("greedy matches the prefix-scan oracle") {
    const GramianSet gs = build_gramians(observable_system(6, 12, 88));
    for (Metric metric : {Metric::MinEig, Metric::MaxEig, Metric::Trace}) {
        for (double eps : {0.2, 0.4, 0.7}) {
            const GreedyResult res = greedy_select(gs, metric, eps);
            CHECK(res.c_greedy == scan_oracle(gs, metric, eps));
            CHECK(res.reached);
        }
    }
}

TEST_CASE("trace and max-eig prefixes grow monotonically") {
    const GramianSet gs = build_gramians(observable_system(5, 9, 51));
    const GreedyResult res = greedy_select(gs, Metric::Trace, 0.9);

    Matrix acc = Matrix::Zero(gs.dim(), gs.dim());
    double prev_trace = 0.0, prev_lmax = 0.0;
    for (int idx : res.order) {
        acc += gs.per_sensor[idx];
        const double tr = acc.trace();
        const double lmax = metric_eval(acc, Metric::MaxEig);
        CHECK(tr >= prev_trace - 1e-12);
        CHECK(lmax >= prev_lmax - 1e-12);
        prev_trace = tr;
        prev_lmax = lmax;
    }
}

TEST_CASE("c_greedy is nonincreasing in eps") {
    const GramianSet gs = build_gramians(observable_system(6, 10, 14));
    for (Metric metric : {Metric::MinEig, Metric::Trace, Metric::MaxEig}) {
        int prev = gs.sensor_count() + 1;
        for (double eps : {0.1, 0.3, 0.5, 0.7, 0.9}) {
            const int c = greedy_select(gs, metric, eps).c_greedy;
            CHECK(c <= prev);
            prev = c;
        }
    }
}

TEST_CASE("greedy is deterministic") {
    const GramianSet gs = build_gramians(observable_system(5, 8, 2));
    const GreedyResult a = greedy_select(gs, Metric::MinEig, 0.4);
    const GreedyResult b = greedy_select(gs, Metric::MinEig, 0.4);
    CHECK(a.order == b.order);
    CHECK(a.c_greedy == b.c_greedy);
    CHECK(a.achieved == b.achieved);
}

TEST_CASE("trace-inverse treats singular prefixes as not-yet-feasible") {
    // Orthogonal rank-one sensors: every strict prefix is singular, so the
    // scan must run through all three before the metric becomes finite.
    LtiSystem sys;
    sys.A = Matrix::Identity(3, 3);
    sys.C = Matrix::Identity(3, 3);
    sys.T = 1;
    const GramianSet gs = build_gramians(sys);
    const GreedyResult res = greedy_select(gs, Metric::TraceInv, 0.5);
    CHECK(res.c_greedy == 3);
    CHECK(res.reached);
}

TEST_CASE("eps outside (0,1) is rejected") {
    const GramianSet gs = identical_sensor_set(3);
    CHECK_THROWS_AS(greedy_select(gs, Metric::Trace, 0.0), InputError);
    CHECK_THROWS_AS(greedy_select(gs, Metric::Trace, 1.0), InputError);
}
