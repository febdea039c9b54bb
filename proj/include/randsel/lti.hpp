#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "randsel/errors.hpp"
#include "randsel/rng.hpp"

namespace randsel {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Relative tolerances used throughout; callers can override per call.
inline constexpr double kSymTol = 1e-10;      // symmetry / consistency checks
inline constexpr double kPdTol = 1e-12;       // positive-definiteness threshold
inline constexpr double kLoewnerTol = 1e-8;   // Loewner-order slack

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
};

enum class CDist { Uniform, Normal };

// Discrete-time plant x_{t+1} = A x_t + w_t, y_t = C x_t + v_t, studied over
// a finite horizon T. Q and R are the optional process / measurement noise
// covariances; row k of C is sensor k.
struct LtiSystem {
    Matrix A;                 // n x n state dynamics
    Matrix C;                 // m x n output map
    std::optional<Matrix> Q;  // n x n, PSD when present
    std::optional<Matrix> R;  // m x m, PD when present
    int T = 0;                // Gramian horizon, >= 1

    int n() const { return static_cast<int>(A.rows()); }
    int m() const { return static_cast<int>(C.rows()); }

    void validate() const;
};

// Full T-step observability Gramian together with its per-sensor summands
// W_k (and, when requested, the factors X_k with X_k X_k' = W_k).
struct GramianSet {
    Matrix full;                      // W, n x n symmetric PSD
    std::vector<Matrix> per_sensor;   // W_k, one per sensor
    std::vector<Matrix> factors;      // X_k, n x T; empty unless requested

    int sensor_count() const { return static_cast<int>(per_sensor.size()); }
    int dim() const { return static_cast<int>(full.rows()); }
};

namespace detail {

inline void check_symmetric(const Matrix& M, const char* name, double tol = kSymTol) {
    if (M.rows() != M.cols())
        throw InputError(std::string(name) + " must be square");
    const double scale = 1.0 + M.cwiseAbs().maxCoeff();
    if ((M - M.transpose()).cwiseAbs().maxCoeff() > tol * scale)
        throw InputError(std::string(name) + " must be symmetric");
}

inline double min_symmetric_eigenvalue(const Matrix& M) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (M + M.transpose()),
                                             Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

inline Matrix symmetrized(const Matrix& M) { return 0.5 * (M + M.transpose()); }

}  // namespace detail

inline void LtiSystem::validate() const {
    if (A.rows() < 1 || A.rows() != A.cols())
        throw InputError("A must be square with n >= 1");
    if (C.rows() < 1)
        throw InputError("C must have at least one sensor row");
    if (C.cols() != A.rows())
        throw InputError("C has " + std::to_string(C.cols()) +
                         " columns but A is " + std::to_string(A.rows()) + "x" +
                         std::to_string(A.rows()));
    if (T < 1)
        throw InputError("horizon T must be >= 1");
    if (Q) {
        detail::check_symmetric(*Q, "Q");
        if (Q->rows() != A.rows())
            throw InputError("Q must be n x n");
        const double lmin = detail::min_symmetric_eigenvalue(*Q);
        const double scale = 1.0 + Q->cwiseAbs().maxCoeff();
        if (lmin < -kSymTol * scale)
            throw InputError("Q must be positive semi-definite");
    }
    if (R) {
        detail::check_symmetric(*R, "R");
        if (R->rows() != C.rows())
            throw InputError("R must be m x m");
        if (detail::min_symmetric_eigenvalue(*R) <= 0.0)
            throw InputError("R must be positive definite");
    }
}

// Per-sensor Gramians W_k = sum_{t<T} (A')^t c_k' c_k A^t by propagating
// v <- A' v (O(T n^2) per sensor), plus their sum W. Factors X_k hold the
// propagated vectors as columns when requested.
inline GramianSet build_gramians(const LtiSystem& sys, bool with_factors = false) {
    sys.validate();
    const int n = sys.n();
    const int m = sys.m();
    const Matrix At = sys.A.transpose();

    GramianSet gs;
    gs.full = Matrix::Zero(n, n);
    gs.per_sensor.reserve(m);
    if (with_factors) gs.factors.reserve(m);

    for (int k = 0; k < m; ++k) {
        Matrix wk = Matrix::Zero(n, n);
        Matrix xk;
        if (with_factors) xk.resize(n, sys.T);
        Vector v = sys.C.row(k).transpose();
        for (int t = 0; t < sys.T; ++t) {
            wk.noalias() += v * v.transpose();
            if (with_factors) xk.col(t) = v;
            if (t + 1 < sys.T) v = At * v;
        }
        wk = detail::symmetrized(wk);
        gs.full += wk;
        gs.per_sensor.push_back(std::move(wk));
        if (with_factors) gs.factors.push_back(std::move(xk));
    }
    gs.full = detail::symmetrized(gs.full);
    return gs;
}

// Stacked observability matrix [C; CA; ...; CA^{T-1}], mT x n.
inline Matrix observability_matrix(const LtiSystem& sys) {
    sys.validate();
    const int n = sys.n();
    const int m = sys.m();
    Matrix obs(static_cast<Eigen::Index>(m) * sys.T, n);
    Matrix block = sys.C;
    for (int t = 0; t < sys.T; ++t) {
        obs.middleRows(static_cast<Eigen::Index>(t) * m, m) = block;
        if (t + 1 < sys.T) block = block * sys.A;
    }
    return obs;
}

inline double spectral_radius(const Matrix& A) {
    if (A.rows() == 0) return 0.0;
    Eigen::EigenSolver<Matrix> es(A, /*computeEigenvectors=*/false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

// Random test system in observability canonical form: A is the companion
// realization with ones on the subdiagonal and a free last column drawn
// uniformly from `last_col`; C entries are uniform from `c_entries` (or
// standard normal with CDist::Normal). Pure function of the seed; the stream
// order is the last column of A first (top to bottom), then C row-major.
inline LtiSystem random_canonical_system(int n, int m, std::uint64_t seed,
                                         Interval last_col = {-1.0, 0.0},
                                         Interval c_entries = {0.0, 1.0},
                                         CDist c_dist = CDist::Uniform) {
    if (n < 1 || m < 1)
        throw InputError("random_canonical_system: n and m must be >= 1");
    if (last_col.hi < last_col.lo || c_entries.hi < c_entries.lo)
        throw InputError("random_canonical_system: empty interval");

    Rng rng(seed);
    LtiSystem sys;
    sys.A = Matrix::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) sys.A(i + 1, i) = 1.0;
    for (int i = 0; i < n; ++i) sys.A(i, n - 1) = rng.uniform(last_col.lo, last_col.hi);

    sys.C.resize(m, n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            sys.C(i, j) = (c_dist == CDist::Uniform)
                              ? rng.uniform(c_entries.lo, c_entries.hi)
                              : rng.gaussian();
    sys.T = n;
    return sys;
}

// Scales A by 1/rho(A) when the spectral radius exceeds 1; everything else
// is copied untouched. rho(A) = 0 is a no-op.
inline LtiSystem normalize_dynamics(const LtiSystem& sys) {
    LtiSystem out = sys;
    const double rho = spectral_radius(sys.A);
    if (rho > 1.0) out.A /= rho;
    return out;
}

// Runs the plant for T steps from x0 and returns y_0 .. y_{T-1}. When an rng
// is supplied, process noise w ~ N(0, Q) and measurement noise v ~ N(0, R)
// are injected for whichever covariances are present.
inline std::vector<Vector> simulate_outputs(const LtiSystem& sys, const Vector& x0,
                                            Rng* noise = nullptr) {
    sys.validate();
    if (x0.size() != sys.n())
        throw InputError("simulate_outputs: x0 has wrong dimension");

    // Eigendecomposition square roots so PSD-singular covariances (Q = 0,
    // the noise-free estimation case) still work.
    auto psd_sqrt = [](const Matrix& M) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(detail::symmetrized(M));
        return Matrix(es.eigenvectors() *
                      es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                      es.eigenvectors().transpose());
    };
    Matrix q_sqrt, r_sqrt;
    if (noise && sys.Q) q_sqrt = psd_sqrt(*sys.Q);
    if (noise && sys.R) r_sqrt = psd_sqrt(*sys.R);
    auto draw = [&](const Matrix& sqrt_cov, int dim) {
        Vector z(dim);
        for (int i = 0; i < dim; ++i) z(i) = noise->gaussian();
        return Vector(sqrt_cov * z);
    };

    std::vector<Vector> outputs;
    outputs.reserve(sys.T);
    Vector x = x0;
    for (int t = 0; t < sys.T; ++t) {
        Vector y = sys.C * x;
        if (noise && sys.R) y += draw(r_sqrt, sys.m());
        outputs.push_back(std::move(y));
        if (t + 1 < sys.T) {
            x = sys.A * x;
            if (noise && sys.Q) x += draw(q_sqrt, sys.n());
        }
    }
    return outputs;
}

}  // namespace randsel
