#include "selfsim/wavelet.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace selfsim {

const std::array<double, 4>& db4_lowpass() {
    static const std::array<double, 4> h = [] {
        const double s3 = std::sqrt(3.0);
        const double norm = 4.0 * std::sqrt(2.0);
        return std::array<double, 4>{(1.0 + s3) / norm, (3.0 + s3) / norm, (3.0 - s3) / norm,
                                     (1.0 - s3) / norm};
    }();
    return h;
}

const std::array<double, 4>& db4_highpass() {
    static const std::array<double, 4> g = [] {
        const auto& h = db4_lowpass();
        return std::array<double, 4>{h[3], -h[2], h[1], -h[0]};
    }();
    return g;
}

DWTPair dwt_db4(std::span<const double> x) {
    if (x.size() < 4) {
        throw std::invalid_argument("Db4 DWT needs at least 4 samples, have " + std::to_string(x.size()));
    }
    const std::size_t n = x.size() + (x.size() % 2);
    const auto at = [&](std::size_t i) { return x[(i % n) % x.size()]; };
    const auto& h = db4_lowpass();
    const auto& g = db4_highpass();
    DWTPair out;
    out.original_length = x.size();
    out.approx.resize(n / 2);
    out.detail.resize(n / 2);
    for (std::size_t j = 0; j < n / 2; ++j) {
        double a = 0.0;
        double d = 0.0;
        for (std::size_t k = 0; k < 4; ++k) {
            const double v = at(2 * j + k);
            a += h[k] * v;
            d += g[k] * v;
        }
        out.approx[j] = a;
        out.detail[j] = d;
    }
    return out;
}

std::vector<double> idwt_db4(const DWTPair& pair) {
    if (pair.approx.size() != pair.detail.size()) {
        throw std::invalid_argument("DWT pair channel lengths differ");
    }
    const std::size_t n = 2 * pair.approx.size();
    if (n < 4) throw std::invalid_argument("DWT pair too short to invert");
    if (pair.original_length != 0 && (pair.original_length + pair.original_length % 2) != n) {
        throw std::invalid_argument("DWT pair length does not match its recorded input length");
    }
    const auto& h = db4_lowpass();
    const auto& g = db4_highpass();
    std::vector<double> x(n, 0.0);
    for (std::size_t j = 0; j < n / 2; ++j) {
        for (std::size_t k = 0; k < 4; ++k) {
            x[(2 * j + k) % n] += h[k] * pair.approx[j] + g[k] * pair.detail[j];
        }
    }
    if (pair.padded()) x.pop_back();
    return x;
}

}  // namespace selfsim
