#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "oracles.hpp"
#include "randsel/lti.hpp"

using namespace randsel;

namespace {

double rel_err(const Matrix& got, const Matrix& want) {
    const double scale = 1.0 + want.norm();
    return (got - want).norm() / scale;
}

}  // namespace

TEST_CASE("identity system Gramians") {
    LtiSystem sys;
    sys.A = Matrix::Identity(2, 2);
    sys.C = Matrix::Identity(2, 2);
    sys.T = 3;

    const GramianSet gs = build_gramians(sys, /*with_factors=*/true);
    CHECK(rel_err(gs.full, 3.0 * Matrix::Identity(2, 2)) < 1e-14);

    Matrix w0 = Matrix::Zero(2, 2);
    w0(0, 0) = 3.0;
    Matrix w1 = Matrix::Zero(2, 2);
    w1(1, 1) = 3.0;
    CHECK(rel_err(gs.per_sensor[0], w0) < 1e-14);
    CHECK(rel_err(gs.per_sensor[1], w1) < 1e-14);

    // X_k columns are (A')^t c_k' = c_k' here.
    for (int k = 0; k < 2; ++k) {
        REQUIRE(gs.factors[k].rows() == 2);
        REQUIRE(gs.factors[k].cols() == 3);
        for (int t = 0; t < 3; ++t)
            CHECK((gs.factors[k].col(t) - sys.C.row(k).transpose()).norm() == 0.0);
    }
}

TEST_CASE("T = 1 collapses to C'C") {
    const LtiSystem sys = [] {
        LtiSystem s = random_canonical_system(4, 3, 11);
        s.T = 1;
        return s;
    }();
    const GramianSet gs = build_gramians(sys);
    CHECK(rel_err(gs.full, sys.C.transpose() * sys.C) < 1e-14);
}

TEST_CASE("Gramian matches the explicit observability-matrix oracle") {
    const LtiSystem sys = [] {
        LtiSystem s = random_canonical_system(4, 3, 42);
        s.T = 5;
        return s;
    }();
    const GramianSet gs = build_gramians(sys, /*with_factors=*/true);
    const Matrix w_oracle = oracles::gramian(sys.A, sys.C, sys.T);
    CHECK(rel_err(gs.full, w_oracle) < 1e-10);

    // Cross-check of the two library code paths.
    const Matrix obs = observability_matrix(sys);
    CHECK(rel_err(obs.transpose() * obs, gs.full) < 1e-10);

    // Factor and sum-decomposition invariants.
    Matrix sum = Matrix::Zero(sys.n(), sys.n());
    for (int k = 0; k < sys.m(); ++k) {
        sum += gs.per_sensor[k];
        CHECK((gs.factors[k] * gs.factors[k].transpose() - gs.per_sensor[k]).norm() <=
              1e-10 * (1.0 + gs.per_sensor[k].norm()));
    }
    CHECK((gs.full - sum).norm() <= 1e-10 * (1.0 + gs.full.norm()));

    // Accumulated Gramians are symmetrized bit-exactly.
    CHECK(gs.full == gs.full.transpose());
}

TEST_CASE("observability matrix trivial shapes") {
    LtiSystem sys;
    sys.A = Matrix::Identity(2, 2);
    sys.C = Matrix::Identity(2, 2);
    sys.T = 2;
    const Matrix obs = observability_matrix(sys);
    REQUIRE(obs.rows() == 4);
    CHECK((obs.topRows(2) - Matrix::Identity(2, 2)).norm() == 0.0);
    CHECK((obs.bottomRows(2) - Matrix::Identity(2, 2)).norm() == 0.0);

    sys.T = 1;
    CHECK((observability_matrix(sys) - sys.C).norm() == 0.0);
}

TEST_CASE("random canonical systems have companion structure") {
    const LtiSystem sys = random_canonical_system(2, 3, 7);
    CHECK(sys.A(1, 0) == 1.0);
    CHECK(sys.A(0, 0) == 0.0);
    for (int i = 0; i < 2; ++i) {
        CHECK(sys.A(i, 1) >= -1.0);
        CHECK(sys.A(i, 1) <= 0.0);
    }
    for (int i = 0; i < sys.C.rows(); ++i)
        for (int j = 0; j < sys.C.cols(); ++j) {
            CHECK(sys.C(i, j) >= 0.0);
            CHECK(sys.C(i, j) <= 1.0);
        }
    CHECK(sys.T == 2);

    const LtiSystem big = random_canonical_system(5, 2, 9);
    for (int i = 0; i + 1 < 5; ++i) CHECK(big.A(i + 1, i) == 1.0);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j + 1 < 5; ++j)
            if (i != j + 1) CHECK(big.A(i, j) == 0.0);
}

TEST_CASE("same seed reproduces the system bit for bit") {
    const LtiSystem a = random_canonical_system(6, 4, 12345);
    const LtiSystem b = random_canonical_system(6, 4, 12345);
    CHECK(a.A == b.A);
    CHECK(a.C == b.C);
    const LtiSystem c = random_canonical_system(6, 4, 12346);
    CHECK(a.A != c.A);
}

TEST_CASE("every sensor pair (A, c_i) is observable") {
    const LtiSystem sys = random_canonical_system(10, 15, 31);
    for (int k = 0; k < sys.m(); ++k) {
        const Matrix obs = oracles::observability(sys.A, sys.C.row(k), sys.n());
        Eigen::ColPivHouseholderQR<Matrix> qr(obs);
        CHECK(qr.rank() == sys.n());
    }
}

TEST_CASE("normalize_dynamics") {
    SECTION("scales a matrix with large spectral radius") {
        LtiSystem sys;
        sys.A = 2.0 * Matrix::Identity(2, 2);
        sys.C = Matrix::Identity(2, 2);
        sys.T = 2;
        const LtiSystem out = normalize_dynamics(sys);
        CHECK((out.A - Matrix::Identity(2, 2)).norm() < 1e-14);
        CHECK(out.C == sys.C);
        CHECK(out.T == sys.T);
    }

    SECTION("leaves a stable matrix untouched") {
        LtiSystem sys;
        sys.A = 0.5 * Matrix::Identity(3, 3);
        sys.C = Matrix::Ones(1, 3);
        sys.T = 3;
        CHECK(normalize_dynamics(sys).A == sys.A);
    }

    SECTION("zero matrix is a no-op") {
        LtiSystem sys;
        sys.A = Matrix::Zero(2, 2);
        sys.C = Matrix::Identity(2, 2);
        sys.T = 1;
        CHECK(normalize_dynamics(sys).A == sys.A);
    }

    SECTION("normalized companion has spectral radius 1 by the root oracle") {
        // Last column in [-3,-1] forces |det| > 1, so at least one root lies
        // outside the unit circle and normalization must kick in.
        const int n = 8;
        const LtiSystem sys = random_canonical_system(n, 2, 99, {-3.0, -1.0});
        const LtiSystem scaled = normalize_dynamics(sys);
        REQUIRE(scaled.A != sys.A);

        // Recover the applied scale from the subdiagonal (originally 1).
        const double rho_used = 1.0 / scaled.A(1, 0);
        CHECK(rho_used > 1.0);

        // The library's spectral radius against the Durand-Kerner root oracle
        // on the exactly known companion characteristic polynomial.
        const auto coeffs = oracles::companion_char_poly(sys.A.col(n - 1));
        const double rho_oracle = oracles::max_root_modulus(coeffs);
        CHECK(std::abs(spectral_radius(sys.A) - rho_oracle) <= 1e-9 * rho_oracle);

        // Scaled characteristic polynomial: q(s) = p(rho s) / rho^n. Its
        // max-modulus root certifies rho(A') = 1 independently of Eigen.
        std::vector<double> scaled_coeffs(coeffs.size());
        for (std::size_t i = 0; i < coeffs.size(); ++i)
            scaled_coeffs[i] = coeffs[i] * std::pow(rho_used, static_cast<double>(i) - n);
        CHECK(std::abs(oracles::max_root_modulus(scaled_coeffs) - 1.0) <= 1e-8);
    }
}

TEST_CASE("validation rejects malformed systems") {
    LtiSystem sys;
    sys.A = Matrix::Identity(3, 3);
    sys.C = Matrix::Ones(2, 2);  // wrong column count
    sys.T = 2;
    CHECK_THROWS_AS(build_gramians(sys), InputError);

    sys.C = Matrix::Ones(2, 3);
    sys.T = 0;
    CHECK_THROWS_AS(build_gramians(sys), InputError);

    sys.T = 2;
    sys.R = Matrix::Zero(2, 2);  // PSD but not PD
    CHECK_THROWS_AS(sys.validate(), InputError);

    sys.R.reset();
    sys.Q = -Matrix::Identity(3, 3);
    CHECK_THROWS_AS(sys.validate(), InputError);
}

TEST_CASE("noise-free simulation reproduces C A^t x0") {
    const LtiSystem sys = [] {
        LtiSystem s = random_canonical_system(3, 2, 5);
        s.T = 4;
        return s;
    }();
    Vector x0(3);
    x0 << 1.0, -1.0, 0.5;
    const auto ys = simulate_outputs(sys, x0);
    REQUIRE(ys.size() == 4);
    Matrix power = Matrix::Identity(3, 3);
    for (int t = 0; t < 4; ++t) {
        CHECK((ys[t] - sys.C * power * x0).norm() < 1e-12);
        power = sys.A * power;
    }
}
