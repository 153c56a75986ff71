#include "oracles.hpp"

#include "selfsim/calibration.hpp"
#include "selfsim/garch.hpp"
#include "selfsim/significance.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace selfsim;

namespace {

// Two-sided exact signed-rank p-value by enumerating all 2^n sign patterns.
double enumerate_p(const std::vector<double>& d) {
    std::vector<double> nz;
    for (double v : d) if (v != 0.0) nz.push_back(v);
    const std::size_t n = nz.size();
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return std::abs(nz[a]) < std::abs(nz[b]); });
    std::vector<double> rank(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && std::abs(nz[idx[j + 1]]) == std::abs(nz[idx[i]])) ++j;
        for (std::size_t q = i; q <= j; ++q) rank[idx[q]] = 0.5 * static_cast<double>(i + j) + 1.0;
        i = j + 1;
    }
    double w_obs = 0.0;
    for (std::size_t i = 0; i < n; ++i) if (nz[i] > 0) w_obs += rank[i];
    const double total = static_cast<double>(n * (n + 1)) / 2.0;
    const double centre = total / 2.0;
    std::size_t extreme = 0;
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        double w = 0.0;
        for (std::size_t i = 0; i < n; ++i) if (mask >> i & 1) w += rank[i];
        if (std::abs(w - centre) >= std::abs(w_obs - centre) - 1e-9) ++extreme;
    }
    return std::min(1.0, static_cast<double>(extreme) / static_cast<double>(std::size_t{1} << n));
}

}  // namespace

TEST_CASE("IID Gaussian NLL anchors") {
    const auto train = oracle::gaussian(200000, 1);
    const auto test1 = oracle::gaussian(200000, 2);
    std::vector<double> test21(test1);
    for (auto& v : test21) v *= std::sqrt(21.0);
    CHECK(iid_gaussian_nll(train, test1, 1) == doctest::Approx(1.419).epsilon(0.01));
    CHECK(iid_gaussian_nll(train, test21, 21) == doctest::Approx(2.941).epsilon(0.01));
    CHECK_THROWS_AS((void)iid_gaussian_fit(std::vector<double>(10, 1.0)), std::domain_error);
    const auto fit = iid_gaussian_fit(std::vector<double>{1.0, 3.0});
    CHECK(fit.mu == 2.0);
    CHECK(fit.var == 1.0);
    CHECK(fit.log_prob(5.0, 3) == doctest::Approx(oracle::normal_logpdf(5.0, 6.0, 3.0)).epsilon(1e-14));
    CHECK(fit.cdf(6.0, 3) == doctest::Approx(0.5));
}

TEST_CASE("GARCH parameter recovery") {
    const auto r = garch_simulate(0.05, 0.1, 0.85, 10000, 3);
    const auto p = garch_fit(r);
    CHECK(std::abs(p.omega - 0.05) <= 0.05);
    CHECK(std::abs(p.alpha - 0.1) <= 0.05);
    CHECK(std::abs(p.beta - 0.85) <= 0.05);
    CHECK(p.persistence() < 1.0);
    CHECK(garch_log_likelihood(p, r) == doctest::Approx(p.log_likelihood).epsilon(1e-10));
}

TEST_CASE("GARCH on IID data nests the Gaussian") {
    const auto g = oracle::gaussian(5000, 4);
    const auto p = garch_fit(g);
    const auto iid = iid_gaussian_fit(g);
    double ll_iid = 0.0;
    for (double v : g) ll_iid += oracle::normal_logpdf(v, iid.mu, iid.var);
    const bool small = p.alpha + p.beta < 0.2 || p.alpha < 0.02;
    const bool close = (p.log_likelihood - ll_iid) / static_cast<double>(g.size()) <= 0.01;
    CHECK((small || close));
    CHECK(p.log_likelihood >= ll_iid - 1e-6 * g.size());
    CHECK_THROWS_AS((void)garch_fit(oracle::gaussian(100, 1)), std::invalid_argument);
}

TEST_CASE("GARCH with no dynamics reduces to the IID NLL") {
    const auto train = oracle::gaussian(1000, 5, 1.3, 0.2);
    const auto daily = oracle::gaussian(1300, 6, 1.3, 0.2);
    const auto iid = iid_gaussian_fit(train);
    GarchParams p;
    p.omega = iid.var;
    p.alpha = 0.0;
    p.beta = 0.0;
    p.mu = iid.mu;
    p.sigma2_0 = iid.var;
    for (std::size_t t : {1, 21}) {
        std::vector<std::size_t> origins;
        std::vector<double> targets;
        for (std::size_t o = 1000; o + t <= daily.size(); o += 7) {
            origins.push_back(o);
            double s = 0.0;
            for (std::size_t i = 0; i < t; ++i) s += daily[o + i];
            targets.push_back(s);
        }
        CHECK(std::abs(garch_nll(p, daily, origins, targets, t) - iid_gaussian_nll(train, targets, t)) <= 1e-10);
    }
}

TEST_CASE("GARCH forecasts beat IID on clustered data and respect the variance floor") {
    const auto r = garch_simulate(0.02, 0.15, 0.83, 6000, 8);
    const std::vector<double> train(r.begin(), r.begin() + 5000);
    const auto p = garch_fit(train);
    std::vector<std::size_t> origins;
    std::vector<double> targets;
    for (std::size_t o = 5000; o < r.size(); ++o) {
        origins.push_back(o);
        targets.push_back(r[o]);
    }
    CHECK(garch_nll(p, r, origins, targets, 1) < iid_gaussian_nll(train, targets, 1));
    std::vector<std::size_t> o21;
    for (std::size_t o = 5000; o + 21 <= r.size(); o += 5) o21.push_back(o);
    const auto fc = garch_forecast(p, r, o21, 21);
    for (double v : fc.variance) CHECK(v >= 21.0 * p.omega);
}

TEST_CASE("KS distance") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u;
    std::vector<double> pit(10000);
    for (auto& v : pit) v = u(rng);
    CHECK(ks_distance(pit) <= 0.02);
    const auto g = oracle::gaussian(10000, 3);
    CHECK(ks_distance([](double x) { return oracle::normal_cdf(x); }, g) <= 0.02);
    CHECK(ks_distance([](double x) { return x < 0.0 ? 0.0 : 1.0; }, g) >= 0.45);
    CHECK(ks_two_sample(g, g) == 0.0);
    CHECK_THROWS_AS((void)ks_distance(std::vector<double>(10, 0.5)), std::invalid_argument);
    // One-sample form against a hand case: values all at 0.5 give sup 0.5.
    CHECK(ks_distance(std::vector<double>(40, 0.5)) == doctest::Approx(0.5));
}

TEST_CASE("energy distances") {
    const auto a = oracle::gaussian(10000, 1);
    const auto b = oracle::gaussian(10000, 2);
    auto brute = [](const std::vector<double>& x, const std::vector<double>& y) {
        double xy = 0, xx = 0, yy = 0;
        for (double p : x) for (double q : y) xy += std::abs(p - q);
        for (double p : x) for (double q : x) xx += std::abs(p - q);
        for (double p : y) for (double q : y) yy += std::abs(p - q);
        const double nx = x.size(), ny = y.size();
        return 2 * xy / (nx * ny) - xx / (nx * nx) - yy / (ny * ny);
    };
    const std::vector<double> sa(a.begin(), a.begin() + 300), sb(b.begin(), b.begin() + 200);
    CHECK(energy_distance(sa, sb) == doctest::Approx(brute(sa, sb)).epsilon(1e-10));
    CHECK(energy_distance(a, a) == 0.0);
    const auto t = tail_energy_distance(a, b, 1.0);
    REQUIRE(t.has_value());
    CHECK(*t <= 0.02);
    CHECK(*tail_energy_distance(a, a, 1.0) == 0.0);
    CHECK(!tail_energy_distance(std::vector<double>(100, 0.1), b, 1.0).has_value());
}

TEST_CASE("block bootstrap intervals") {
    const std::vector<double> c(252, 1.5);
    const auto ci = block_bootstrap_ci(c);
    CHECK(ci.lo == 1.5);
    CHECK(ci.hi == 1.5);
    const auto g = oracle::gaussian(252, 17, 2.0);
    const auto a = block_bootstrap_ci(g, 21, 1000, 0.95, 3);
    const auto b = block_bootstrap_ci(g, 21, 1000, 0.95, 3);
    CHECK(a.lo == b.lo);
    CHECK(a.hi == b.hi);
    CHECK(a.lo <= a.estimate);
    CHECK(a.estimate <= a.hi);
    CHECK_THROWS_AS((void)block_bootstrap_ci(std::vector<double>(30, 1.0), 21), std::invalid_argument);
}

TEST_CASE("bootstrap width tracks the analytic IID width") {
    double ratio = 0.0;
    const int reps = 20;
    for (int s = 0; s < reps; ++s) {
        const auto g = oracle::gaussian(252, 500 + s);
        const auto ci = block_bootstrap_ci(g, 21, 1000, 0.95, s);
        ratio += (ci.hi - ci.lo) / (2.0 * 1.96 * std::sqrt(oracle::var(g) / 252.0));
    }
    ratio /= reps;
    CHECK(std::abs(ratio - 1.0) <= 0.25);
}

TEST_CASE("signed-rank test") {
    std::vector<double> pos{0.3, 1.2, 0.5, 2.0, 0.7, 0.9, 1.1, 0.4, 1.6, 0.8};
    const auto t = wilcoxon_signed_rank(pos);
    CHECK(t.p_value == doctest::Approx(2.0 / 1024.0).epsilon(1e-12));
    CHECK(t.n == 10);
    std::vector<double> sym{0.5, -0.5, 1.0, -1.0, 2.0, -2.0, 3.0, -3.0};
    CHECK(wilcoxon_signed_rank(sym).p_value == 1.0);
    CHECK_THROWS_AS((void)wilcoxon_signed_rank(std::vector<double>{1.0, 0.0, -2.0, 3.0, 0.0}), std::invalid_argument);
    const auto ranks = signed_rank_magnitudes(std::vector<double>{-1.0, 2.0, 1.0, 3.0});
    CHECK(ranks == std::vector<double>{1.5, 3.0, 1.5, 4.0});
}

TEST_CASE("exact signed-rank matches enumeration") {
    std::mt19937_64 rng(77);
    std::normal_distribution<double> nd(0.3, 1.0);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 5 + trial % 8;
        std::vector<double> d(n);
        for (auto& v : d) v = std::round(nd(rng) * 4.0) / 4.0;  // coarse grid forces ties and zeros
        std::size_t nz = 0;
        for (double v : d) nz += v != 0.0;
        if (nz < 5) continue;
        CAPTURE(trial);
        CHECK(wilcoxon_signed_rank(d).p_value == doctest::Approx(enumerate_p(d)).epsilon(1e-12));
    }
}

TEST_CASE("large-sample signed-rank uses the normal approximation") {
    auto d = oracle::gaussian(80, 4, 1.0, 0.5);
    const auto t = wilcoxon_signed_rank(d);
    CHECK(t.method.find("normal") != std::string::npos);
    CHECK(t.p_value < 0.01);
}

TEST_CASE("Holm step-down") {
    const auto h = holm_bonferroni(std::vector<double>{0.01, 0.04});
    CHECK(h.adjusted[0] == doctest::Approx(0.02));
    CHECK(h.adjusted[1] == doctest::Approx(0.04));
    CHECK(h.reject[0]);
    CHECK(h.reject[1]);
    const auto one = holm_bonferroni(std::vector<double>{0.3});
    CHECK(one.adjusted[0] == 0.3);
    const auto ones = holm_bonferroni(std::vector<double>(4, 1.0));
    for (bool r : ones.reject) CHECK(!r);
}

TEST_CASE("Holm adjustment is monotone in the raw p-values") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 0.2);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> p(1 + trial % 7);
        for (auto& v : p) v = u(rng);
        const auto h = holm_bonferroni(p);
        for (std::size_t i = 0; i < p.size(); ++i) {
            CHECK(h.adjusted[i] >= p[i]);
            CHECK(h.adjusted[i] <= 1.0);
            for (std::size_t j = 0; j < p.size(); ++j) {
                if (p[i] <= p[j]) CHECK(h.adjusted[i] <= h.adjusted[j]);
            }
            CHECK(h.reject[i] == (h.adjusted[i] <= 0.05));
        }
    }
}
