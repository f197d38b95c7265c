#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "nab/metrics.hpp"
#include "nab/random.hpp"

namespace {

nab::Image<double> random_image(std::size_t h, std::size_t w, std::uint64_t seed, double lo = 0.0,
                                double hi = 1.0) {
    nab::Image<double> img(h, w);
    nab::rng::Engine engine(seed);
    for (double& v : img.values) v = nab::rng::uniform(engine, lo, hi);
    return img;
}

// Brute-force oracles: direct transcription of the formulas with no shared
// code (naive loops, no integral images).
double psnr_oracle(const nab::Image<double>& img, const nab::Image<double>& ref,
                   double max_value) {
    double mse = 0.0;
    for (std::size_t i = 0; i < img.values.size(); ++i) {
        const double d = img.values[i] - ref.values[i];
        mse += d * d;
    }
    mse /= double(img.values.size());
    return 10.0 * std::log10(max_value * max_value / mse);
}

double ssim_oracle(const nab::Image<double>& img, const nab::Image<double>& ref) {
    const std::size_t win = 7;
    double lo = ref.values[0], hi = ref.values[0];
    for (double v : ref.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double range = hi - lo > 0.0 ? hi - lo : 1.0;
    const double c1 = (0.01 * range) * (0.01 * range);
    const double c2 = (0.03 * range) * (0.03 * range);
    const double n = double(win * win);
    const double cov_norm = n / (n - 1.0);

    double total = 0.0;
    std::size_t windows = 0;
    for (std::size_t r = 0; r + win <= img.height; ++r) {
        for (std::size_t c = 0; c + win <= img.width; ++c) {
            double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
            for (std::size_t i = 0; i < win; ++i) {
                for (std::size_t j = 0; j < win; ++j) {
                    const double x = img.at(r + i, c + j);
                    const double y = ref.at(r + i, c + j);
                    sx += x;
                    sy += y;
                    sxx += x * x;
                    syy += y * y;
                    sxy += x * y;
                }
            }
            const double ux = sx / n, uy = sy / n;
            const double vx = cov_norm * (sxx / n - ux * ux);
            const double vy = cov_norm * (syy / n - uy * uy);
            const double cxy = cov_norm * (sxy / n - ux * uy);
            total += ((2 * ux * uy + c1) * (2 * cxy + c2)) /
                     ((ux * ux + uy * uy + c1) * (vx + vy + c2));
            ++windows;
        }
    }
    return total / double(windows);
}

}  // namespace

TEST_CASE("psnr worked values") {
    SECTION("identical images flag infinity") {
        const auto img = random_image(8, 8, 1);
        const double p = nab::psnr(img, img, 1.0);
        CHECK(std::isinf(p));
        CHECK(p > 0.0);
    }
    SECTION("uniform 0.1 error against max 1 gives 20 dB") {
        nab::Image<double> ref(4, 4, 0.0);
        nab::Image<double> img(4, 4, 0.1);
        CHECK(nab::psnr(img, ref, 1.0) == Catch::Approx(20.0).epsilon(1e-12));
    }
    SECTION("shape mismatch rejected") {
        CHECK_THROWS_AS(nab::psnr(nab::Image<double>(2, 2), nab::Image<double>(2, 3), 1.0),
                        std::invalid_argument);
        CHECK_THROWS_AS(nab::psnr(nab::Image<double>(2, 2), nab::Image<double>(2, 2), 0.0),
                        std::invalid_argument);
    }
}

TEST_CASE("psnr agrees with the brute-force oracle") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto ref = random_image(16, 16, seed);
        const auto img = random_image(16, 16, seed + 100);
        CHECK(nab::psnr(img, ref, 1.0) ==
              Catch::Approx(psnr_oracle(img, ref, 1.0)).margin(1e-9));
        CHECK(nab::psnr(img, ref, 2.5) ==
              Catch::Approx(psnr_oracle(img, ref, 2.5)).margin(1e-9));
    }
}

TEST_CASE("psnr symmetry and noise monotonicity") {
    const auto a = random_image(12, 12, 3);
    const auto b = random_image(12, 12, 4);
    CHECK(nab::psnr(a, b, 1.0) == nab::psnr(b, a, 1.0));

    const auto ref = random_image(16, 16, 5);
    double previous = std::numeric_limits<double>::infinity();
    for (double amplitude : {0.01, 0.02, 0.04}) {
        auto noisy = ref;
        nab::rng::Engine engine(77);
        for (double& v : noisy.values) v += nab::rng::uniform(engine, -amplitude, amplitude);
        const double p = nab::psnr(noisy, ref, 1.0);
        CHECK(p < previous);
        previous = p;
    }
}

TEST_CASE("ssim worked values") {
    SECTION("identical images give exactly one") {
        const auto img = random_image(9, 9, 6);
        CHECK(nab::ssim(img, img) == 1.0);
    }
    SECTION("constant offset lowers similarity below one") {
        const auto ref = random_image(10, 10, 7);
        auto img = ref;
        for (double& v : img.values) v += 0.25;
        CHECK(nab::ssim(img, ref) < 1.0);
        CHECK(nab::ssim(img, ref) > 0.0);
    }
    SECTION("images smaller than the window are rejected") {
        CHECK_THROWS_AS(nab::ssim(nab::Image<double>(6, 9), nab::Image<double>(6, 9)),
                        std::invalid_argument);
        CHECK_NOTHROW(nab::ssim(nab::Image<double>(7, 7), nab::Image<double>(7, 7)));
    }
    SECTION("flat reference still compares cleanly") {
        nab::Image<double> flat(8, 8, 0.5);
        CHECK(nab::ssim(flat, flat) == 1.0);
        const auto img = random_image(8, 8, 8);
        const double s = nab::ssim(img, flat);
        CHECK(std::isfinite(s));
        CHECK(s <= 1.0);
    }
}

TEST_CASE("ssim agrees with the brute-force oracle") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto ref = random_image(16, 16, seed * 11);
        const auto img = random_image(16, 16, seed * 11 + 1);
        CHECK(nab::ssim(img, ref) == Catch::Approx(ssim_oracle(img, ref)).margin(1e-9));
    }
    // non-square and correlated pairs
    const auto ref = random_image(9, 23, 40);
    auto img = ref;
    nab::rng::Engine engine(41);
    for (double& v : img.values) v += nab::rng::uniform(engine, -0.05, 0.05);
    CHECK(nab::ssim(img, ref) == Catch::Approx(ssim_oracle(img, ref)).margin(1e-9));
    CHECK(nab::ssim(img, ref) > 0.8);
}

TEST_CASE("data_range spans the reference values") {
    nab::Image<double> img(2, 2, std::vector<double>{0.5, -1.0, 2.0, 0.0});
    CHECK(nab::data_range(img) == 3.0);
    CHECK(nab::data_range(nab::Image<double>(2, 2, 0.7)) == 0.0);
}

TEST_CASE("dataset_metrics aggregates per-pair results") {
    using Pair = std::pair<nab::Image<double>, nab::Image<double>>;

    SECTION("single pair mean equals the pair metric") {
        const auto ref = random_image(8, 8, 50);
        const auto img = random_image(8, 8, 51);
        const auto report = nab::dataset_metrics<double>({{img, ref}});
        REQUIRE(report.psnr_db.size() == 1);
        CHECK(report.psnr_mean == report.psnr_db[0]);
        CHECK(report.ssim_mean == report.ssim_value[0]);
        CHECK(report.psnr_infinite == 0);
    }
    SECTION("means are arithmetic and permutation-invariant") {
        const auto ref1 = random_image(8, 8, 60);
        const auto img1 = random_image(8, 8, 61);
        const auto ref2 = random_image(8, 8, 62);
        const auto img2 = random_image(8, 8, 63);
        const auto fwd = nab::dataset_metrics<double>({{img1, ref1}, {img2, ref2}});
        const auto rev = nab::dataset_metrics<double>({{img2, ref2}, {img1, ref1}});
        CHECK(fwd.psnr_mean ==
              Catch::Approx((fwd.psnr_db[0] + fwd.psnr_db[1]) / 2.0).epsilon(1e-15));
        CHECK(fwd.psnr_mean == Catch::Approx(rev.psnr_mean).epsilon(1e-15));
        CHECK(fwd.ssim_mean == Catch::Approx(rev.ssim_mean).epsilon(1e-15));
    }
    SECTION("exact matches are excluded from the psnr mean and counted") {
        const auto ref = random_image(8, 8, 70);
        const auto img = random_image(8, 8, 71);
        const auto report = nab::dataset_metrics<double>({{ref, ref}, {img, ref}});
        CHECK(report.psnr_infinite == 1);
        CHECK(report.psnr_mean == Catch::Approx(report.psnr_db[1]).epsilon(1e-15));
        CHECK(std::isinf(report.psnr_db[0]));
        CHECK(report.ssim_value[0] == 1.0);
    }
    SECTION("empty list rejected") {
        CHECK_THROWS_AS(nab::dataset_metrics<double>({}), std::invalid_argument);
    }
}
