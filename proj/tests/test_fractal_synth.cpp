#include "oracles.hpp"

#include "selfsim/fgn.hpp"

#include <doctest.h>

#include <cmath>

using namespace selfsim;

TEST_CASE("HurstExponent domain") {
    CHECK_THROWS_AS(HurstExponent(0.0), std::domain_error);
    CHECK_THROWS_AS(HurstExponent(1.0), std::domain_error);
    CHECK_NOTHROW(HurstExponent(0.01));
}

TEST_CASE("fgn_autocov matches the second-difference formula") {
    CHECK(fgn_autocov(HurstExponent(0.5), 0) == 1.0);
    for (std::size_t k = 1; k < 10; ++k) CHECK(std::abs(fgn_autocov(HurstExponent(0.5), k)) <= 1e-15);
    CHECK(fgn_autocov(HurstExponent(0.7), 1) == doctest::Approx(0.5 * (std::pow(2.0, 1.4) - 2.0)).epsilon(1e-14));
    CHECK(fgn_autocov(HurstExponent(0.7), 1) == doctest::Approx(0.3195).epsilon(1e-3));
    CHECK(fgn_autocov(HurstExponent(0.3), 1) == doctest::Approx(-0.2421).epsilon(1e-3));
    for (double h : {0.1, 0.25, 0.5, 0.65, 0.9}) {
        CHECK(fgn_autocov(HurstExponent(h), 0) == 1.0);
        for (std::size_t k : {1, 2, 7, 100, 1000}) {
            CHECK(fgn_autocov(HurstExponent(h), k) ==
                  doctest::Approx(oracle::fgn_gamma(h, static_cast<double>(k))).epsilon(1e-10));
        }
    }
}

TEST_CASE("white-noise case of synth_fgn") {
    const std::size_t n = 1 << 14;
    const auto x = synth_fgn(HurstExponent(0.5), n, 17);
    const std::vector<double> v(x.values().begin(), x.values().end());
    const double m = oracle::mean(v);
    double c0 = 0.0, c1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) c0 += (v[i] - m) * (v[i] - m);
    for (std::size_t i = 1; i < n; ++i) c1 += (v[i] - m) * (v[i - 1] - m);
    CHECK(std::abs(c1 / c0) <= 3.0 / std::sqrt(static_cast<double>(n)));
    CHECK(oracle::var(v) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("synth_fgn is deterministic in the seed") {
    const auto a = synth_fgn(HurstExponent(0.7), 1000, 42);
    const auto b = synth_fgn(HurstExponent(0.7), 1000, 42);
    const auto c = synth_fgn(HurstExponent(0.7), 1000, 43);
    bool same = true, differ = false;
    for (std::size_t i = 0; i < 1000; ++i) {
        same = same && a[i] == b[i];
        differ = differ || a[i] != c[i];
    }
    CHECK(same);
    CHECK(differ);
}

// Replicate spread gives the Monte Carlo standard error of each lag's estimate.
static void check_autocov(bool hosking, double h, std::size_t n, std::size_t reps) {
    const std::size_t lags = 8;
    std::vector<std::vector<double>> est(lags + 1);
    for (std::size_t r = 0; r < reps; ++r) {
        const auto x = hosking ? synth_fgn_hosking(HurstExponent(h), n, 100 + r) : synth_fgn(HurstExponent(h), n, 100 + r);
        for (std::size_t k = 1; k <= lags; ++k) {
            double s = 0.0;
            for (std::size_t i = k; i < n; ++i) s += x[i] * x[i - k];
            est[k].push_back(s / static_cast<double>(n - k));
        }
    }
    for (std::size_t k = 1; k <= lags; ++k) {
        const double se = std::sqrt(oracle::var(est[k]) / static_cast<double>(reps));
        CAPTURE(k);
        CHECK(std::abs(oracle::mean(est[k]) - oracle::fgn_gamma(h, static_cast<double>(k))) <= 4.0 * se + 1e-12);
        // A single path sits within 4 replicate standard deviations as well.
        CHECK(std::abs(est[k][0] - oracle::fgn_gamma(h, static_cast<double>(k))) <= 4.0 * std::sqrt(oracle::var(est[k])));
    }
}

TEST_CASE("Davies-Harte autocovariance at H=0.7") { check_autocov(false, 0.7, 1 << 16, 12); }
TEST_CASE("Hosking autocovariance at H=0.3") { check_autocov(true, 0.3, 2048, 12); }

TEST_CASE("circulant eigenvalues are non-negative for fGn") {
    for (double h : {0.1, 0.5, 0.7, 0.95}) {
        for (double lam : circulant_eigenvalues(HurstExponent(h), 1024)) CHECK(lam >= -1e-9);
    }
}

TEST_CASE("aggregate hand sums") {
    const TimeSeries x("x", {1.0, 2.0, 3.0, 4.0});
    const auto a1 = aggregate(x, 1);
    CHECK(a1.values == std::vector<double>{1.0, 2.0, 3.0, 4.0});
    const auto a2 = aggregate(x, 2);
    CHECK(a2.values == std::vector<double>{3.0, 5.0, 7.0});
    const auto b2 = block_aggregate(x.values(), 2);
    CHECK(b2.values == std::vector<double>{3.0, 7.0});
    CHECK_THROWS_AS((void)aggregate(x, 0), std::invalid_argument);
    CHECK_THROWS_AS((void)aggregate(x, 5), std::invalid_argument);
}

TEST_CASE("aggregate variance scales as T^{2H}") {
    const double h = 0.7;
    const auto x = synth_fgn(HurstExponent(h), 1 << 16, 9);
    std::vector<double> lt, lv;
    for (std::size_t t : {1, 2, 4, 8, 16}) {
        const auto a = block_aggregate(x.values(), t);
        lt.push_back(std::log(static_cast<double>(t)));
        lv.push_back(std::log(oracle::var(a.values)));
    }
    CHECK(std::abs(oracle::slope(lt, lv) - 2.0 * h) <= 0.05);
    for (std::size_t t : {5, 21}) {
        const auto a = block_aggregate(x.values(), t);
        CHECK(oracle::var(a.values) / std::pow(static_cast<double>(t), 2.0 * h) == doctest::Approx(1.0).epsilon(0.1));
    }
}
