#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <limits>
#include <string>

#include "randsel/errors.hpp"
#include "randsel/lti.hpp"

namespace randsel {

// Scalar figures of merit for a symmetric Gramian. TraceInv is only defined
// on positive-definite input.
enum class Metric { MinEig, MaxEig, Trace, TraceInv };

inline const char* to_string(Metric m) {
    switch (m) {
        case Metric::MinEig: return "mineig";
        case Metric::MaxEig: return "maxeig";
        case Metric::Trace: return "trace";
        case Metric::TraceInv: return "traceinv";
    }
    return "?";
}

inline Metric metric_from_string(const std::string& s) {
    if (s == "mineig") return Metric::MinEig;
    if (s == "maxeig") return Metric::MaxEig;
    if (s == "trace") return Metric::Trace;
    if (s == "traceinv") return Metric::TraceInv;
    throw InputError("unknown metric '" + s +
                     "' (expected mineig|maxeig|trace|traceinv)");
}

// Per-sensor scores gamma_k = min{ g : W_k <= g W } and their sum rho.
// rho >= 1 whenever W is nonsingular.
struct GammaScores {
    Vector gamma;
    double rho = 0.0;
};

namespace detail {

inline Eigen::SelfAdjointEigenSolver<Matrix> sym_eig(const Matrix& M,
                                                     bool vectors = false) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(
        symmetrized(M), vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw Error("symmetric eigendecomposition failed");
    return es;
}

}  // namespace detail

// Spectral norm of a symmetric matrix (largest eigenvalue magnitude).
inline double spectral_norm_sym(const Matrix& M) {
    if (M.rows() == 0) return 0.0;
    return detail::sym_eig(M).eigenvalues().cwiseAbs().maxCoeff();
}

inline double metric_eval(const Matrix& M, Metric metric, double pd_tol = kPdTol) {
    if (M.rows() != M.cols()) throw InputError("metric_eval: matrix must be square");
    if (metric == Metric::Trace) return M.trace();

    const Vector evals = detail::sym_eig(M).eigenvalues();
    switch (metric) {
        case Metric::MinEig: return evals.minCoeff();
        case Metric::MaxEig: return evals.maxCoeff();
        case Metric::TraceInv: {
            const double lmax = evals.cwiseAbs().maxCoeff();
            const double lmin = evals.minCoeff();
            if (lmin <= pd_tol * lmax)
                throw SingularError("trace-inverse of a singular matrix (min eigenvalue " +
                                        std::to_string(lmin) + ")",
                                    lmin);
            return evals.cwiseInverse().sum();
        }
        default: break;
    }
    throw InputError("metric_eval: unhandled metric");
}

// Two-sided Loewner check (1-eps) W <= G <= (1+eps) W, with slack tol*||W||
// on the smallest eigenvalue of each side.
inline bool loewner_within(const Matrix& W, const Matrix& G, double eps,
                           double tol = kLoewnerTol) {
    if (W.rows() != G.rows() || W.cols() != G.cols())
        throw InputError("loewner_within: dimension mismatch");
    if (!(eps > 0.0 && eps < 1.0))
        throw InputError("loewner_within: eps must lie in (0,1)");

    const double slack = tol * spectral_norm_sym(W);
    const double lower = detail::sym_eig(G - (1.0 - eps) * W).eigenvalues().minCoeff();
    if (lower < -slack) return false;
    const double upper = detail::sym_eig((1.0 + eps) * W - G).eigenvalues().minCoeff();
    return upper >= -slack;
}

// Inverse square root of a symmetric positive-definite matrix via its
// eigendecomposition.
inline Matrix psd_sqrt_inv(const Matrix& W, double pd_tol = kPdTol) {
    const auto es = detail::sym_eig(W, /*vectors=*/true);
    const Vector evals = es.eigenvalues();
    const double lmax = evals.cwiseAbs().maxCoeff();
    const double lmin = evals.minCoeff();
    if (lmin <= pd_tol * lmax) {
        const double cond = (lmin > 0.0) ? lmax / lmin
                                         : std::numeric_limits<double>::infinity();
        throw SingularError("psd_sqrt_inv: matrix is numerically singular (min eigenvalue " +
                                std::to_string(lmin) + ", condition number " +
                                std::to_string(cond) + ")",
                            lmin);
    }
    const Matrix half = es.eigenvectors() *
                        evals.cwiseSqrt().cwiseInverse().asDiagonal() *
                        es.eigenvectors().transpose();
    return detail::symmetrized(half);
}

// gamma_k = lambda_max(W^{-1} W_k), computed through the similarity transform
// W^{-1/2} W_k W^{-1/2} (same spectrum, symmetric eigensolve only).
inline GammaScores gamma_scores(const GramianSet& gs, double pd_tol = kPdTol) {
    const int m = gs.sensor_count();
    if (m < 1) throw InputError("gamma_scores: empty Gramian set");

    const Vector wev = detail::sym_eig(gs.full).eigenvalues();
    if (wev.minCoeff() <= pd_tol * wev.cwiseAbs().maxCoeff())
        throw NotObservableError(
            "gamma_scores: full Gramian is singular, system is not observable",
            wev.minCoeff());

    const Matrix w_inv_half = psd_sqrt_inv(gs.full, pd_tol);
    GammaScores scores;
    scores.gamma.resize(m);
    for (int k = 0; k < m; ++k) {
        const Matrix similar = w_inv_half * gs.per_sensor[k] * w_inv_half;
        scores.gamma(k) = std::max(0.0, detail::sym_eig(similar).eigenvalues().maxCoeff());
    }
    scores.rho = scores.gamma.sum();
    return scores;
}

}  // namespace randsel
