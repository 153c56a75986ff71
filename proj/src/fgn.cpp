#include "selfsim/fgn.hpp"

#include "fftw_util.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace selfsim {

HurstExponent::HurstExponent(double value) : value_(value) {
    if (!(value > 0.0 && value < 1.0)) {
        throw std::domain_error("Hurst exponent must lie in (0, 1), got " + std::to_string(value));
    }
}

double fgn_autocov(HurstExponent h, std::size_t k) {
    if (k == 0) return 1.0;
    const double two_h = 2.0 * h.value();
    const double kk = static_cast<double>(k);
    return 0.5 * (std::pow(kk + 1.0, two_h) - 2.0 * std::pow(kk, two_h) + std::pow(kk - 1.0, two_h));
}

std::vector<double> circulant_eigenvalues(HurstExponent h, std::size_t n) {
    const std::size_t m = 2 * n;
    detail::FftBuffer buf(m);
    for (std::size_t j = 0; j <= n; ++j) {
        buf.set(j, fgn_autocov(h, j), 0.0);
    }
    for (std::size_t j = n + 1; j < m; ++j) {
        buf.set(j, fgn_autocov(h, m - j), 0.0);
    }
    buf.forward();
    std::vector<double> eig(m);
    for (std::size_t k = 0; k < m; ++k) {
        eig[k] = buf.re(k);
    }
    return eig;
}

TimeSeries synth_fgn_hosking(HurstExponent h, std::size_t n, std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("fGn length must be at least 2");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    std::vector<double> gamma(n);
    for (std::size_t k = 0; k < n; ++k) gamma[k] = fgn_autocov(h, k);

    std::vector<double> x(n);
    std::vector<double> phi(n, 0.0);
    std::vector<double> prev(n, 0.0);
    double v = gamma[0];
    x[0] = std::sqrt(v) * normal(rng);
    for (std::size_t t = 1; t < n; ++t) {
        // Durbin-Levinson update of the order-t predictor.
        double num = gamma[t];
        for (std::size_t j = 1; j < t; ++j) num -= prev[j] * gamma[t - j];
        const double kappa = num / v;
        phi[t] = kappa;
        for (std::size_t j = 1; j < t; ++j) phi[j] = prev[j] - kappa * prev[t - j];
        v *= (1.0 - kappa * kappa);
        double mu = 0.0;
        for (std::size_t j = 1; j <= t; ++j) mu += phi[j] * x[t - j];
        x[t] = mu + std::sqrt(v) * normal(rng);
        std::copy(phi.begin(), phi.begin() + static_cast<std::ptrdiff_t>(t + 1), prev.begin());
    }
    return TimeSeries("fgn_H" + std::to_string(h.value()), std::move(x));
}

TimeSeries synth_fgn(HurstExponent h, std::size_t n, std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("fGn length must be at least 2");
    const auto eig = circulant_eigenvalues(h, n);
    double largest = 0.0;
    for (double e : eig) largest = std::max(largest, std::abs(e));
    for (double e : eig) {
        if (e < -1e-10 * largest) {
            return synth_fgn_hosking(h, n, seed);
        }
    }

    const std::size_t m = 2 * n;
    const double md = static_cast<double>(m);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    detail::FftBuffer w(m);
    const auto lam = [&](std::size_t k) { return std::max(eig[k], 0.0); };
    w.set(0, std::sqrt(lam(0) / md) * normal(rng), 0.0);
    w.set(n, std::sqrt(lam(n) / md) * normal(rng), 0.0);
    for (std::size_t k = 1; k < n; ++k) {
        const double s = std::sqrt(lam(k) / (2.0 * md));
        const double a = s * normal(rng);
        const double b = s * normal(rng);
        w.set(k, a, b);
        w.set(m - k, a, -b);
    }
    w.forward();
    std::vector<double> x(n);
    for (std::size_t j = 0; j < n; ++j) x[j] = w.re(j);
    return TimeSeries("fgn_H" + std::to_string(h.value()), std::move(x));
}

AggregateSeries aggregate(const TimeSeries& x, std::size_t horizon) {
    if (horizon == 0) throw std::invalid_argument("horizon must be positive");
    if (horizon > x.size()) {
        throw std::invalid_argument("horizon " + std::to_string(horizon) + " exceeds series length " +
                                    std::to_string(x.size()));
    }
    const auto v = x.values();
    AggregateSeries out{horizon, {}};
    out.values.reserve(v.size() - horizon + 1);
    for (std::size_t t = horizon - 1; t < v.size(); ++t) {
        double s = 0.0;
        for (std::size_t u = t + 1 - horizon; u <= t; ++u) s += v[u];
        out.values.push_back(s);
    }
    return out;
}

AggregateSeries block_aggregate(std::span<const double> x, std::size_t horizon) {
    if (horizon == 0) throw std::invalid_argument("horizon must be positive");
    if (horizon > x.size()) {
        throw std::invalid_argument("horizon " + std::to_string(horizon) + " exceeds series length " +
                                    std::to_string(x.size()));
    }
    AggregateSeries out{horizon, {}};
    for (std::size_t b = 0; (b + 1) * horizon <= x.size(); ++b) {
        double s = 0.0;
        for (std::size_t u = b * horizon; u < (b + 1) * horizon; ++u) s += x[u];
        out.values.push_back(s);
    }
    return out;
}

}  // namespace selfsim
