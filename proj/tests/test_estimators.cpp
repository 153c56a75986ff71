#include "oracles.hpp"

#include "selfsim/estimators.hpp"
#include "selfsim/fgn.hpp"

#include <doctest.h>

#include <cmath>

using namespace selfsim;

namespace {
double oracle_kurtosis(const std::vector<double>& v) {
    const double m = oracle::mean(v);
    double m2 = 0.0, m4 = 0.0;
    for (double x : v) {
        const double d = (x - m) * (x - m);
        m2 += d;
        m4 += d * d;
    }
    m2 /= static_cast<double>(v.size());
    m4 /= static_cast<double>(v.size());
    return m4 / (m2 * m2) - 3.0;
}
}  // namespace

TEST_CASE("R/S on IID Gaussian sits slightly above one half") {
    const auto g = oracle::gaussian(1 << 14, 21);
    const double h = rs_hurst(g).value;
    CHECK(h >= 0.45);
    CHECK(h <= 0.60);
}

TEST_CASE("R/S bias on fGn") {
    for (double h : {0.3, 0.5, 0.7, 0.8}) {
        CAPTURE(h);
        const auto x = synth_fgn(HurstExponent(h), 1 << 16, 7);
        CHECK(std::abs(rs_hurst(x.values()).value - h) <= 0.07);
    }
}

TEST_CASE("R/S regression points are consistent with the slope") {
    const auto x = synth_fgn(HurstExponent(0.6), 1 << 13, 1);
    const auto est = rs_hurst(x.values());
    REQUIRE(est.log_sizes.size() >= 3);
    CHECK(oracle::slope(est.log_sizes, est.log_stats) == doctest::Approx(est.slope).epsilon(1e-12));
}

TEST_CASE("R/S error paths") {
    CHECK_THROWS_AS((void)rs_hurst(std::vector<double>(4096, 1.0)), std::invalid_argument);
    CHECK_THROWS_AS((void)rs_hurst(std::vector<double>(10, 1.0)), std::invalid_argument);
}

TEST_CASE("Allan variance hand computation") {
    const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
    CHECK(allan_variance(x, 2) == doctest::Approx(2.0));
    CHECK_THROWS_AS((void)allan_variance(x, 4), std::invalid_argument);
    CHECK_THROWS_AS((void)allan_variance(x, 0), std::invalid_argument);
}

TEST_CASE("Allan variance ratio on IID noise") {
    const auto g = oracle::gaussian(10000, 4);
    const double rho = 63.0 * allan_variance(g, 63) / oracle::var(g);
    CHECK(rho >= 0.8);
    CHECK(rho <= 1.2);
}

// The block-mean variance of fGn scales as tau^{2H-2}, so the log-log slope is 2H - 2
// and (1 + slope) / 2 estimates H - 1/2.
TEST_CASE("AVAR slope on IID and fGn") {
    const auto g = oracle::gaussian(1 << 16, 8);
    const auto iid = avar_hurst(g);
    CHECK(std::abs(iid.slope + 1.0) <= 0.3);
    CHECK(std::abs(iid.value) <= 0.15);
    for (double h : {0.3, 0.5, 0.7, 0.8}) {
        CAPTURE(h);
        const auto x = synth_fgn(HurstExponent(h), 1 << 16, 31);
        const auto est = avar_hurst(x.values());
        CHECK(std::abs(est.slope - (2.0 * h - 2.0)) <= 0.2);
        CHECK(std::abs(est.value - (h - 0.5)) <= 0.1);
        CHECK(est.value == doctest::Approx(0.5 * (1.0 + est.slope)).epsilon(1e-14));
    }
    const auto anti = synth_fgn(HurstExponent(0.2), 1 << 16, 2);
    CHECK(avar_hurst(anti.values()).value < 0.35);
}

TEST_CASE("AVAR needs enough data") {
    CHECK_THROWS_AS((void)avar_hurst(oracle::gaussian(300, 1)), std::invalid_argument);
}

TEST_CASE("excess kurtosis") {
    const auto g = oracle::gaussian(100000, 10);
    CHECK(std::abs(excess_kurtosis(g)) <= 0.1);
    CHECK(excess_kurtosis(g) == doctest::Approx(oracle_kurtosis(g)).epsilon(1e-10));
    const std::vector<double> two{1.0, -1.0, 1.0, -1.0, -1.0, 1.0};
    CHECK(excess_kurtosis(two) == doctest::Approx(-2.0).epsilon(1e-14));
    CHECK_THROWS_AS((void)excess_kurtosis(std::vector<double>(10, 3.0)), std::domain_error);
}

TEST_CASE("F-score rows") {
    const auto g = oracle::gaussian(5000, 12);
    const auto row = fscore(TimeSeries("g", g));
    CHECK(std::abs(row.f) <= 0.2);
    CHECK(!row.excluded);
    CHECK(row.f == doctest::Approx(fscore_value(row.rho, row.h_av, row.excess_kurtosis)).epsilon(1e-12));
    CHECK(fscore_value(0.5, -0.2, 2.0) == doctest::Approx(-std::log10(0.5) - 0.0 - 0.1).epsilon(1e-14));
    CHECK(fscore_value(2.0, 0.3, 0.0) == doctest::Approx(-std::log10(2.0) - 0.3).epsilon(1e-14));

    const auto anti = synth_fgn(HurstExponent(0.2), 5000, 3);
    const auto ra = fscore(anti);
    CHECK(ra.rho < 1.0);
    CHECK(ra.f > 0.0);
}

TEST_CASE("heavy tails are flagged") {
    auto v = oracle::gaussian(5000, 13, 0.1);
    for (std::size_t i = 0; i < v.size(); i += 500) v[i] = (i % 1000 == 0) ? 8.0 : -8.0;
    REQUIRE(oracle_kurtosis(v) > kKurtosisCutoff);
    CHECK(fscore(TimeSeries("heavy", v)).excluded);
}

TEST_CASE("rank_universe ordering and errors") {
    Panel panel;
    const double hs[] = {0.2, 0.5, 0.8};
    const char* names[] = {"anti", "white", "persist"};
    for (int i = 0; i < 3; ++i) {
        panel.emplace(names[i], PanelSeries{synth_fgn(HurstExponent(hs[i]), 5000, 50 + i), {}});
    }
    const auto ranked = rank_universe(panel, 3);
    REQUIRE(ranked.size() == 3);
    CHECK(ranked.front().ticker == "anti");
    CHECK(ranked.back().ticker == "persist");
    for (std::size_t i = 1; i < ranked.size(); ++i) CHECK(ranked[i - 1].f >= ranked[i].f);
    for (const auto& r : ranked) CHECK(r.f == fscore_value(r.rho, r.h_av, r.excess_kurtosis));
    CHECK(rank_universe(panel, 1).size() == 1);

    Panel heavy;
    auto v = oracle::gaussian(5000, 14, 0.1);
    for (std::size_t i = 0; i < v.size(); i += 500) v[i] = 8.0;
    heavy.emplace("h", PanelSeries{TimeSeries("h", v), {}});
    CHECK_THROWS_AS((void)rank_universe(heavy, 1), std::invalid_argument);
}

TEST_CASE("IID rho averages to one") {
    double acc = 0.0;
    for (std::uint64_t s = 0; s < 100; ++s) acc += fscore(TimeSeries("g", oracle::gaussian(10000, 1000 + s))).rho;
    const double m = acc / 100.0;
    CHECK(m >= 0.97);
    CHECK(m <= 1.03);
}
