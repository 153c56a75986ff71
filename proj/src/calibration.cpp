#include "selfsim/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace selfsim {

double ks_distance(std::span<const double> pit) {
    if (pit.size() < 20) throw std::invalid_argument("KS distance needs at least 20 targets");
    std::vector<double> u(pit.begin(), pit.end());
    std::sort(u.begin(), u.end());
    const double n = static_cast<double>(u.size());
    double d = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double ui = std::clamp(u[i], 0.0, 1.0);
        d = std::max(d, static_cast<double>(i + 1) / n - ui);
        d = std::max(d, ui - static_cast<double>(i) / n);
    }
    return d;
}

double ks_distance(const std::function<double(double)>& cdf, std::span<const double> targets) {
    std::vector<double> u;
    u.reserve(targets.size());
    for (double r : targets) u.push_back(cdf(r));
    return ks_distance(u);
}

double ks_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("two-sample KS needs non-empty samples");
    std::vector<double> x(a.begin(), a.end());
    std::vector<double> y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double nx = static_cast<double>(x.size());
    const double ny = static_cast<double>(y.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] == v) ++i;
        while (j < y.size() && y[j] == v) ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
    }
    return d;
}

namespace {

// sum_i sum_j |a_i - b_j| for sorted a, b via prefix sums.
double cross_abs_sum(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> prefix(b.size() + 1, 0.0);
    for (std::size_t j = 0; j < b.size(); ++j) prefix[j + 1] = prefix[j] + b[j];
    const double total = prefix.back();
    const double nb = static_cast<double>(b.size());
    double s = 0.0;
    for (double v : a) {
        const auto k = static_cast<std::size_t>(std::lower_bound(b.begin(), b.end(), v) - b.begin());
        const double below = static_cast<double>(k) * v - prefix[k];
        const double above = (total - prefix[k]) - (nb - static_cast<double>(k)) * v;
        s += below + above;
    }
    return s;
}

}  // namespace

double energy_distance(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("energy distance needs non-empty samples");
    std::vector<double> x(a.begin(), a.end());
    std::vector<double> y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double nx = static_cast<double>(x.size());
    const double ny = static_cast<double>(y.size());
    // averaging both orders keeps the statistic symmetric to the last bit
    const double exy = 0.5 * (cross_abs_sum(x, y) + cross_abs_sum(y, x)) / (nx * ny);
    const double exx = cross_abs_sum(x, x) / (nx * nx);
    const double eyy = cross_abs_sum(y, y) / (ny * ny);
    return 2.0 * exy - exx - eyy;
}

std::optional<double> tail_energy_distance(std::span<const double> samples, std::span<const double> targets,
                                           double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("tail scale sigma must be positive");
    std::vector<double> a;
    std::vector<double> b;
    for (double v : samples) {
        if (std::fabs(v) > 2.0 * sigma) a.push_back(v);
    }
    for (double v : targets) {
        if (std::fabs(v) > 2.0 * sigma) b.push_back(v);
    }
    if (a.empty() || b.empty()) return std::nullopt;
    return energy_distance(a, b);
}

}  // namespace selfsim
