#pragma once

// Independent reference computations used by the tests. Nothing here calls into
// the library, so a bug there cannot hide behind the same bug here.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <algorithm>
#include <vector>

namespace oracle {

inline double fgn_gamma(double h, double k) {
    const double e = 2.0 * h;
    return 0.5 * (std::pow(std::abs(k + 1.0), e) - 2.0 * std::pow(std::abs(k), e) + std::pow(std::abs(k - 1.0), e));
}

inline std::vector<double> gaussian(std::size_t n, std::uint64_t seed, double sd = 1.0, double mu = 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(mu, sd);
    std::vector<double> v(n);
    for (auto& x : v) x = nd(rng);
    return v;
}

inline double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double var(const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size());
}

/// Least-squares slope of y on x.
inline double slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

inline double normal_logpdf(double x, double mu = 0.0, double var = 1.0) {
    return -0.5 * std::log(2.0 * M_PI * var) - 0.5 * (x - mu) * (x - mu) / var;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Brute-force causal dilated convolution over channels x time, zero left padding.
inline std::vector<std::vector<double>> conv(const std::vector<std::vector<double>>& x,
                                             const std::vector<std::vector<std::vector<double>>>& w,  // [o][i][j]
                                             const std::vector<double>& b, std::size_t d) {
    const std::size_t n = x[0].size();
    std::vector<std::vector<double>> y(w.size(), std::vector<double>(n, 0.0));
    for (std::size_t o = 0; o < w.size(); ++o) {
        for (std::size_t t = 0; t < n; ++t) {
            double acc = b.empty() ? 0.0 : b[o];
            for (std::size_t i = 0; i < x.size(); ++i) {
                for (std::size_t j = 0; j < w[o][i].size(); ++j) {
                    const long src = static_cast<long>(t) - static_cast<long>(d * j);
                    if (src >= 0) acc += w[o][i][j] * x[i][static_cast<std::size_t>(src)];
                }
            }
            y[o][t] = acc;
        }
    }
    return y;
}

}  // namespace oracle
