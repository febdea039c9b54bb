#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>

#include "randsel/rng.hpp"

using namespace randsel;

TEST_CASE("splitmix64 matches the published test vectors") {
    // First outputs of the reference splitmix64 generator seeded with 0.
    CHECK(splitmix64(0) == 16294208416658607535ull);
    CHECK(splitmix64(1234567) == 6457827717110365317ull);
}

TEST_CASE("derive_seed is stable and separates streams") {
    CHECK(derive_seed(1, 2, 3, 4) == 15374388949593934587ull);
    CHECK(derive_seed(42, 1, 0, 0) == 4488420693440655736ull);

    CHECK(derive_seed(7, 1, 0, 0) != derive_seed(7, 2, 0, 0));
    CHECK(derive_seed(7, 1, 0, 0) != derive_seed(7, 1, 1, 0));
    CHECK(derive_seed(7, 1, 0, 0) != derive_seed(7, 1, 0, 1));
    CHECK(derive_seed(7, 1, 0, 0) != derive_seed(8, 1, 0, 0));
}

TEST_CASE("mt19937_64 stream is the standard one") {
    // The standard pins the 10000th output of the default-seeded engine.
    std::mt19937_64 engine(5489u);
    std::uint64_t value = 0;
    for (int i = 0; i < 10000; ++i) value = engine();
    CHECK(value == 9981545732273789042ull);
}

TEST_CASE("uniform01 stays in [0,1) and replays exactly") {
    Rng a(123), b(123);
    for (int i = 0; i < 10000; ++i) {
        const double u = a.uniform01();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(u == b.uniform01());
    }
}

TEST_CASE("uniform(lo,hi) respects the interval") {
    Rng rng(77);
    for (int i = 0; i < 1000; ++i) {
        const double u = rng.uniform(-1.0, 0.0);
        CHECK(u >= -1.0);
        CHECK(u <= 0.0);
    }
}

TEST_CASE("gaussian has roughly standard moments") {
    Rng rng(2024);
    const int n = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.gaussian();
        sum += z;
        sumsq += z * z;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(var - 1.0) < 0.02);
}
