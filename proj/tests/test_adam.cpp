#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "nab/adam.hpp"

TEST_CASE("first adam step approximates a signed learning-rate move") {
    nab::AdamState state;
    state.resize(3);
    state.step = 1;
    nab::AdamParams hp;
    std::vector<double> params = {1.0, -2.0, 0.5};
    const std::vector<double> grads = {0.5, -4.0, 1e-3};
    nab::adam_apply(state, hp, 0.01, 0, params.data(), grads.data(), 3, "test");
    // at t=1 the bias-corrected update is -lr * g / (|g| + eps') ~ -lr * sign(g)
    CHECK(params[0] == Catch::Approx(1.0 - 0.01).margin(1e-5));
    CHECK(params[1] == Catch::Approx(-2.0 + 0.01).margin(1e-5));
    CHECK(params[2] == Catch::Approx(0.5 - 0.01).margin(1e-4));
}

TEST_CASE("zero gradients are a fixed point") {
    nab::AdamState state;
    state.resize(2);
    nab::AdamParams hp;
    std::vector<double> params = {0.25, -0.75};
    const std::vector<double> zero = {0.0, 0.0};
    for (int t = 1; t <= 10; ++t) {
        state.step = std::uint64_t(t);
        nab::adam_apply(state, hp, 0.1, 0, params.data(), zero.data(), 2, "test");
    }
    CHECK(params[0] == 0.25);
    CHECK(params[1] == -0.75);
}

TEST_CASE("adam matches a scalar reference implementation") {
    // independent reference: the textbook update tracked step by step
    nab::AdamState state;
    state.resize(1);
    nab::AdamParams hp;
    double param = 0.3;

    double ref_param = 0.3, ref_m = 0.0, ref_v = 0.0;
    const double lr = 0.05;
    const std::vector<double> sequence = {0.4, -1.2, 0.9, 0.0, 2.5, -0.1};
    for (std::size_t t = 1; t <= sequence.size(); ++t) {
        const double g = sequence[t - 1];
        state.step = t;
        nab::adam_apply(state, hp, lr, 0, &param, &g, 1, "test");

        ref_m = 0.9 * ref_m + 0.1 * g;
        ref_v = 0.999 * ref_v + 0.001 * g * g;
        const double mhat = ref_m / (1.0 - std::pow(0.9, double(t)));
        const double vhat = ref_v / (1.0 - std::pow(0.999, double(t)));
        ref_param -= lr * mhat / (std::sqrt(vhat) + 1e-8);

        CHECK(param == Catch::Approx(ref_param).epsilon(1e-14));
        CHECK(state.m[0] == Catch::Approx(ref_m).epsilon(1e-14));
        CHECK(state.v[0] == Catch::Approx(ref_v).epsilon(1e-14));
    }
}

TEST_CASE("adam slices share flat state without interference") {
    nab::AdamState state;
    state.resize(4);
    state.step = 1;
    nab::AdamParams hp;
    std::vector<double> a = {1.0, 1.0};
    std::vector<double> b = {1.0, 1.0};
    const std::vector<double> ga = {1.0, -1.0};
    const std::vector<double> gb = {2.0, 0.5};
    nab::adam_apply(state, hp, 0.1, 0, a.data(), ga.data(), 2, "a");
    nab::adam_apply(state, hp, 0.1, 2, b.data(), gb.data(), 2, "b");
    CHECK(state.m[0] == Catch::Approx(0.1).epsilon(1e-15));
    CHECK(state.m[2] == Catch::Approx(0.2).epsilon(1e-15));
    // both groups moved toward their gradient sign with the same magnitude profile
    CHECK(a[0] < 1.0);
    CHECK(a[1] > 1.0);
    CHECK(b[0] < 1.0);
    CHECK(b[1] < 1.0);
}

TEST_CASE("adam validation") {
    nab::AdamState state;
    state.resize(1);
    nab::AdamParams hp;
    double param = 0.0;
    const double good = 1.0;

    SECTION("step must be advanced before applying") {
        CHECK_THROWS_AS(nab::adam_apply(state, hp, 0.1, 0, &param, &good, 1, "test"),
                        std::invalid_argument);
    }
    SECTION("slice must fit the state") {
        state.step = 1;
        CHECK_THROWS_AS(nab::adam_apply(state, hp, 0.1, 1, &param, &good, 1, "test"),
                        std::invalid_argument);
    }
    SECTION("non-finite gradient names the group") {
        state.step = 1;
        const double nan = std::nan("");
        try {
            nab::adam_apply(state, hp, 0.1, 0, &param, &nan, 1, "theta");
            FAIL("expected a throw");
        } catch (const std::invalid_argument& e) {
            CHECK(std::string(e.what()).find("theta") != std::string::npos);
        }
    }
}
