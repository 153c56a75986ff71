#include "oracles.hpp"

#include "selfsim/fgn.hpp"
#include "selfsim/spectral.hpp"

#include <doctest.h>

#include <cmath>

using namespace selfsim;

TEST_CASE("default band") {
    const auto b = default_band(256);
    CHECK(b.lo == doctest::Approx(4.0 / 256.0));
    CHECK(b.hi == doctest::Approx(0.25));
}

TEST_CASE("white noise spectrum is flat with the right level") {
    const auto g = oracle::gaussian(1 << 14, 6);
    const auto psd = welch_psd(g, 256, 0.5);
    const auto band = default_band(256);
    // One-sided density of unit-variance white noise on [0, 1/2] is 2.
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < psd.f.size(); ++i) {
        if (psd.f[i] >= band.lo && psd.f[i] <= band.hi) {
            s += psd.s[i];
            ++n;
        }
    }
    const double level = s / static_cast<double>(n);
    CHECK(level >= 0.9 * 2.0);
    CHECK(level <= 1.1 * 2.0);
    double integral = 0.0;
    const double df = psd.f[1] - psd.f[0];
    for (double v : psd.s) integral += v * df;
    CHECK(integral == doctest::Approx(oracle::var(g)).epsilon(0.05));
    CHECK(std::abs(spectral_slope(psd, band).beta) <= 0.1);
}

TEST_CASE("sinusoid peaks at its frequency") {
    std::vector<double> x(4096);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(2.0 * M_PI * 0.125 * static_cast<double>(i));
    const auto psd = welch_psd(x, 256);
    std::size_t best = 0;
    for (std::size_t i = 1; i < psd.s.size(); ++i) if (psd.s[i] > psd.s[best]) best = i;
    CHECK(psd.f[best] == doctest::Approx(0.125));
}

TEST_CASE("fGn spectral slope") {
    const auto x = synth_fgn(HurstExponent(0.7), 1 << 14, 3);
    const auto psd = welch_psd(x.values(), 256);
    CHECK(std::abs(spectral_slope(psd, default_band(256)).beta - 0.4) <= 0.1);
}

TEST_CASE("exact power law regression") {
    Psd psd;
    psd.segment = 256;
    for (std::size_t i = 0; i <= 128; ++i) {
        psd.f.push_back(static_cast<double>(i) / 256.0);
        psd.s.push_back(i == 0 ? 0.0 : 3.0 * std::pow(psd.f.back(), -0.5));
    }
    const auto fit = spectral_slope(psd, default_band(256));
    CHECK(std::abs(fit.beta - 0.5) <= 1e-10);
    CHECK(std::abs(fit.intercept - std::log(3.0)) <= 1e-10);
}

TEST_CASE("welch argument checks") {
    CHECK_THROWS_AS((void)welch_psd(std::vector<double>(100, 1.0), 256), std::invalid_argument);
    CHECK_THROWS_AS((void)welch_psd(oracle::gaussian(1000, 1), 256, 1.0), std::invalid_argument);
}

namespace {
std::vector<std::vector<double>> fgn_batch(double h, std::size_t count, std::size_t len, std::uint64_t seed) {
    std::vector<std::vector<double>> b;
    for (std::size_t i = 0; i < count; ++i) {
        const auto x = synth_fgn(HurstExponent(h), len, seed + i);
        b.emplace_back(x.values().begin(), x.values().end());
    }
    return b;
}
}  // namespace

TEST_CASE("welch loss is small on matching fGn") {
    const auto b = fgn_batch(0.7, 64, 256, 10);
    const auto l = spectral_loss_welch(b, 0.7);
    CHECK(l.slope_term <= 0.02);
    CHECK(l.beta_target == doctest::Approx(0.4));
    const auto wrong = spectral_loss_welch(b, 0.3);
    CHECK(wrong.slope_term > l.slope_term);
}

TEST_CASE("shape term ignores amplitude") {
    auto b = fgn_batch(0.6, 8, 256, 40);
    const auto a = spectral_loss_welch(b, 0.6);
    for (auto& row : b) for (auto& v : row) v *= 3.0;
    const auto c = spectral_loss_welch(b, 0.6);
    CHECK(std::abs(a.shape_term - c.shape_term) <= 1e-10);
    CHECK(std::abs(a.slope_term - c.slope_term) <= 1e-10);
}

TEST_CASE("welch loss gradient matches finite differences") {
    SpectralOptions opts;
    opts.segment = 32;
    auto b = fgn_batch(0.6, 8, 64, 70);
    const auto base = spectral_loss_welch(b, 0.75, opts);
    REQUIRE(base.grad.size() == b.size());
    const double eps = 1e-6;
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t i = rng() % b.size(), t = rng() % b[0].size();
        const double keep = b[i][t];
        b[i][t] = keep + eps;
        const double up = spectral_loss_welch(b, 0.75, opts).value;
        b[i][t] = keep - eps;
        const double dn = spectral_loss_welch(b, 0.75, opts).value;
        b[i][t] = keep;
        const double fd = (up - dn) / (2.0 * eps);
        const double an = base.grad[i][t];
        CAPTURE(fd);
        CAPTURE(an);
        CHECK(std::abs(fd - an) <= 1e-4 * std::max(1e-3, std::max(std::abs(fd), std::abs(an))));
    }
}

TEST_CASE("variance surrogate and off mode") {
    const std::vector<double> unit{1.0, -1.0, 1.0, -1.0};
    const auto s = spectral_loss_surrogate(unit);
    CHECK(s.value == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(s.grad.empty());
    const std::vector<double> wide{2.0, -2.0};
    CHECK(spectral_loss_surrogate(wide).value == doctest::Approx(9.0));
    CHECK(parse_spectral_mode("off") == SpectralMode::off);
    CHECK(parse_spectral_mode("welch") == SpectralMode::welch);
    CHECK(std::string(to_string(SpectralMode::variance_surrogate)) == "variance_surrogate");
    CHECK_THROWS_AS((void)parse_spectral_mode("nope"), std::invalid_argument);
}
