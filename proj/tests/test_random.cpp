#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "nab/random.hpp"

TEST_CASE("unit draws match the 53-bit construction") {
    nab::rng::Engine a(42), b(42);
    for (int i = 0; i < 1000; ++i) {
        const double expected =
            static_cast<double>(b() >> 11) * 0x1.0p-53;
        const double got = nab::rng::unit(a);
        CHECK(got == expected);
        CHECK(got >= 0.0);
        CHECK(got < 1.0);
    }
}

TEST_CASE("uniform stays inside its interval and is deterministic") {
    nab::rng::Engine a(7), b(7);
    for (int i = 0; i < 1000; ++i) {
        const double x = nab::rng::uniform(a, -0.9, 0.9);
        CHECK(x >= -0.9);
        CHECK(x < 0.9);
        CHECK(x == nab::rng::uniform(b, -0.9, 0.9));
    }
}

TEST_CASE("normal produces finite draws with the requested moments") {
    nab::rng::Engine engine(3);
    const int n = 20000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = nab::rng::normal(engine, 0.0, 0.05);
        REQUIRE(std::isfinite(x));
        sum += x;
        sq += x * x;
    }
    const double mean = sum / n;
    const double stddev = std::sqrt(sq / n - mean * mean);
    CHECK(std::abs(mean) < 0.002);
    CHECK(stddev == Catch::Approx(0.05).margin(0.002));
}

TEST_CASE("normal honors mean and stddev arguments deterministically") {
    nab::rng::Engine a(11), b(11);
    for (int i = 0; i < 100; ++i) {
        const double x = nab::rng::normal(a, 2.0, 3.0);
        const double y = nab::rng::normal(b, 2.0, 3.0);
        CHECK(x == y);
    }
}
