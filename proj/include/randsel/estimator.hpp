#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "randsel/errors.hpp"
#include "randsel/lti.hpp"
#include "randsel/sampler.hpp"
#include "randsel/spectral.hpp"

namespace randsel {

// Rescaled measurement subsystem induced by a selection: Pi picks and scales
// the chosen sensor rows, C_bar = Pi C, R_bar = Pi R Pi'. The T-step Gramian
// of (A, C_bar) reproduces the sampled approximation G exactly.
struct ReducedSystem {
    Matrix Pi;              // q x m, one nonzero sqrt(n_j / (c p_j)) per row
    Matrix C_bar;           // q x n
    Matrix R_bar;           // q x q
    std::vector<int> kept;  // the q distinct sensor indices, ascending

    int q() const { return static_cast<int>(kept.size()); }
};

struct RiccatiSolution {
    Matrix P;              // steady-state error covariance
    double residual = 0.0; // spectral norm of the fixed-point mismatch
    long iterations = 0;
};

struct DareOptions {
    double tol = 1e-10;          // relative step tolerance
    long max_iterations = 100000;
};

inline ReducedSystem build_reduced(const LtiSystem& sys, const SamplingPlan& plan,
                                   const Selection& sel) {
    sys.validate();
    if (!sys.R)
        throw InputError("build_reduced: system has no measurement noise covariance R");
    if (plan.sensor_count() != sys.m() || sel.counts.size() != sys.m())
        throw InputError("build_reduced: sensor count mismatch");
    if (sel.c < 1 || sel.unique_count < 1)
        throw InputError("build_reduced: empty selection");

    ReducedSystem red;
    for (int k = 0; k < sys.m(); ++k)
        if (sel.counts(k) > 0) red.kept.push_back(k);

    red.Pi = Matrix::Zero(red.q(), sys.m());
    for (int r = 0; r < red.q(); ++r) {
        const int k = red.kept[r];
        if (!(plan.probs(k) > 0.0))
            throw Error("build_reduced: selected sensor has zero probability");
        red.Pi(r, k) = std::sqrt(sel.counts(k) / (sel.c * plan.probs(k)));
    }
    red.C_bar = red.Pi * sys.C;
    red.R_bar = detail::symmetrized(red.Pi * (*sys.R) * red.Pi.transpose());
    return red;
}

namespace detail {

// Accumulates W = sum_t (A')^t C'C A^t and M = sum_t (A')^t C'RC A^t without
// forming the stacked observability matrix or the block-diagonal noise lift.
struct LsAccumulation {
    Matrix gramian;
    Matrix weighted;  // empty when R is not supplied
};

inline LsAccumulation accumulate_ls(const Matrix& A, const Matrix& C, const Matrix* R,
                                    int T) {
    if (A.rows() != A.cols() || C.cols() != A.rows())
        throw InputError("least squares: A/C dimension mismatch");
    if (R && (R->rows() != C.rows() || R->cols() != C.rows()))
        throw InputError("least squares: R must match the number of sensor rows");
    if (T < 1) throw InputError("least squares: horizon must be >= 1");

    const int n = static_cast<int>(A.rows());
    LsAccumulation acc;
    acc.gramian = Matrix::Zero(n, n);
    if (R) acc.weighted = Matrix::Zero(n, n);
    Matrix block = C;  // C A^t
    for (int t = 0; t < T; ++t) {
        acc.gramian.noalias() += block.transpose() * block;
        if (R) acc.weighted.noalias() += block.transpose() * (*R) * block;
        if (t + 1 < T) block = block * A;
    }
    acc.gramian = symmetrized(acc.gramian);
    if (R) acc.weighted = symmetrized(acc.weighted);
    return acc;
}

inline Eigen::LDLT<Matrix> observable_ldlt(const Matrix& gramian, double pd_tol) {
    const Vector evals = sym_eig(gramian).eigenvalues();
    if (evals.minCoeff() <= pd_tol * evals.cwiseAbs().maxCoeff())
        throw NotObservableError(
            "least squares: observability Gramian is singular over this horizon",
            evals.minCoeff());
    return Eigen::LDLT<Matrix>(gramian);
}

}  // namespace detail

// Initial-state estimation error covariance Sigma = W^{-1} O' R_blk O W^{-1},
// with R_blk the horizon-wide block-diagonal lift of R.
inline Matrix ls_covariance(const Matrix& A, const Matrix& C, const Matrix& R, int T,
                            double pd_tol = kPdTol) {
    if (detail::min_symmetric_eigenvalue(R) <= 0.0)
        throw InputError("ls_covariance: R must be positive definite");
    const auto acc = detail::accumulate_ls(A, C, &R, T);
    const auto ldlt = detail::observable_ldlt(acc.gramian, pd_tol);
    const Matrix half = ldlt.solve(acc.weighted);           // W^{-1} M
    return detail::symmetrized(ldlt.solve(half.transpose()));  // W^{-1} M W^{-1}
}

// Least-squares estimate of the initial state from outputs y_0 .. y_{T-1}:
// x_hat = W^{-1} O' [y_0; ...; y_{T-1}].
inline Vector ls_estimate(const Matrix& A, const Matrix& C,
                          const std::vector<Vector>& outputs, double pd_tol = kPdTol) {
    const int T = static_cast<int>(outputs.size());
    const auto acc = detail::accumulate_ls(A, C, nullptr, T);
    const auto ldlt = detail::observable_ldlt(acc.gramian, pd_tol);

    Vector rhs = Vector::Zero(A.rows());
    Matrix block = C;
    for (int t = 0; t < T; ++t) {
        if (outputs[t].size() != C.rows())
            throw InputError("ls_estimate: output vector has wrong dimension");
        rhs.noalias() += block.transpose() * outputs[t];
        if (t + 1 < T) block = block * A;
    }
    return ldlt.solve(rhs);
}

// Upper bound on the reduced-system error covariance, valid whenever the
// sampled Gramian satisfies the lower Loewner inequality:
//   Sigma_bar <= lambda_max(Pi'Pi R Pi'Pi) / (1-eps)^2 * W^{-1}.
// The middle matrix is computed as Pi' R_bar Pi, which equals Pi'Pi R Pi'Pi.
inline Matrix covariance_bound(const ReducedSystem& red, const Matrix& W, double eps,
                               double pd_tol = kPdTol) {
    if (!(eps > 0.0 && eps < 1.0))
        throw InputError("covariance_bound: eps must lie in (0,1)");

    const auto es = detail::sym_eig(W, /*vectors=*/true);
    const Vector evals = es.eigenvalues();
    if (evals.minCoeff() <= pd_tol * evals.cwiseAbs().maxCoeff())
        throw NotObservableError("covariance_bound: Gramian is singular",
                                 evals.minCoeff());

    const Matrix middle = red.Pi.transpose() * red.R_bar * red.Pi;
    const double factor = detail::sym_eig(middle).eigenvalues().maxCoeff() /
                          ((1.0 - eps) * (1.0 - eps));
    const Matrix w_inv = es.eigenvectors() * evals.cwiseInverse().asDiagonal() *
                         es.eigenvectors().transpose();
    return detail::symmetrized(factor * w_inv);
}

// Scalar form of the bound factor for diagonal R: max_r (Pi Pi')_rr (R_bar)_rr
// over the kept rows, divided by (1-eps)^2. Multiplying W^{-1} by this scalar
// reproduces covariance_bound exactly when R is diagonal.
inline double covariance_bound_scalar(const ReducedSystem& red, double eps) {
    if (!(eps > 0.0 && eps < 1.0))
        throw InputError("covariance_bound_scalar: eps must lie in (0,1)");
    const double off = (red.R_bar - Matrix(red.R_bar.diagonal().asDiagonal()))
                           .cwiseAbs()
                           .maxCoeff();
    if (off > kSymTol * (1.0 + red.R_bar.cwiseAbs().maxCoeff()))
        throw InputError("covariance_bound_scalar: R_bar is not diagonal");

    double best = 0.0;
    for (int r = 0; r < red.q(); ++r)
        best = std::max(best, red.Pi.row(r).squaredNorm() * red.R_bar(r, r));
    return best / ((1.0 - eps) * (1.0 - eps));
}

// Steady-state error covariance of the Kalman filter: fixed point of
//   P <- A P A' + Q - A P C' (C P C' + R)^{-1} C P A',
// iterated from P_0 = Q until the step shrinks below tol * (1 + ||P||).
inline RiccatiSolution solve_dare(const Matrix& A, const Matrix& C, const Matrix& Q,
                                  const Matrix& R, DareOptions opts = {}) {
    const int n = static_cast<int>(A.rows());
    if (A.cols() != n || C.cols() != n || Q.rows() != n || Q.cols() != n)
        throw InputError("solve_dare: dimension mismatch");
    if (R.rows() != C.rows() || R.cols() != C.rows())
        throw InputError("solve_dare: R must match the number of sensor rows");
    if (detail::min_symmetric_eigenvalue(R) <= 0.0)
        throw InputError("solve_dare: R must be positive definite");

    auto step = [&](const Matrix& p) {
        const Matrix s = detail::symmetrized(C * p * C.transpose() + R);
        const Matrix y = C * p * A.transpose();  // so the correction is y' s^{-1} y
        Eigen::LDLT<Matrix> ldlt(s);
        Matrix next = A * p * A.transpose() + Q - y.transpose() * ldlt.solve(y);
        return detail::symmetrized(next);
    };

    Matrix p = detail::symmetrized(Q);
    long it = 0;
    for (; it < opts.max_iterations; ++it) {
        const Matrix next = step(p);
        const double diff = (next - p).norm();
        if (!std::isfinite(diff))
            throw ConvergenceError(
                "solve_dare: iteration diverged (last iterate norm " +
                    std::to_string(p.norm()) + ")",
                diff, it + 1);
        p = next;
        if (diff <= opts.tol * (1.0 + p.norm())) break;
    }
    if (it == opts.max_iterations)
        throw ConvergenceError(
            "solve_dare: no fixed point within " + std::to_string(opts.max_iterations) +
                " iterations (last step " + std::to_string((step(p) - p).norm()) +
                ", last iterate norm " + std::to_string(p.norm()) + ")",
            (step(p) - p).norm(), it);

    RiccatiSolution sol;
    sol.P = p;
    sol.iterations = it + 1;
    sol.residual = spectral_norm_sym(step(p) - p);
    return sol;
}

// Relative spectral-norm gap between the reduced-system and full-system
// steady-state covariances.
inline double kalman_compare(const LtiSystem& sys, const ReducedSystem& red,
                             DareOptions opts = {}) {
    sys.validate();
    if (!sys.Q || !sys.R)
        throw InputError("kalman_compare: system needs both Q and R");
    const RiccatiSolution full = solve_dare(sys.A, sys.C, *sys.Q, *sys.R, opts);
    const RiccatiSolution reduced = solve_dare(sys.A, red.C_bar, *sys.Q, red.R_bar, opts);
    return spectral_norm_sym(reduced.P - full.P) / spectral_norm_sym(full.P);
}

}  // namespace randsel
