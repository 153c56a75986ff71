#include "selfsim/collapse.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>

namespace selfsim {

double CFCurve::at(double kq) const {
    if (k.size() < 2 || k.size() != values.size()) {
        throw std::logic_error("malformed characteristic-function curve");
    }
    const double step = k[1] - k[0];
    if (kq < k.front() || kq > k.back()) {
        throw std::out_of_range("wavenumber outside the curve's grid");
    }
    const double pos = (kq - k.front()) / step;
    auto i = static_cast<std::size_t>(pos);
    if (i >= k.size() - 1) i = k.size() - 2;
    const double frac = pos - static_cast<double>(i);
    return values[i] + frac * (values[i + 1] - values[i]);
}

std::vector<double> uniform_k_grid(double k_max, std::size_t points) {
    if (points < 2 || !(k_max > 0.0)) throw std::invalid_argument("bad wavenumber grid");
    std::vector<double> k(points);
    for (std::size_t j = 0; j < points; ++j) {
        k[j] = k_max * static_cast<double>(j) / static_cast<double>(points - 1);
    }
    return k;
}

CFCurve empirical_cf(std::span<const double> samples, std::span<const double> k_grid,
                     std::size_t horizon, double scale) {
    if (samples.empty()) throw std::invalid_argument("characteristic function of an empty sample");
    if (samples.size() < 100) {
        throw std::invalid_argument("characteristic function needs at least 100 samples, have " +
                                    std::to_string(samples.size()));
    }
    if (k_grid.size() < 2 || k_grid.front() != 0.0) {
        throw std::invalid_argument("wavenumber grid must start at 0 and have at least 2 points");
    }
    const std::size_t m = k_grid.size();
    const double step = k_grid[1] - k_grid[0];
    bool uniform = step > 0.0;
    for (std::size_t j = 1; j < m && uniform; ++j) {
        uniform = std::abs((k_grid[j] - k_grid[j - 1]) - step) <= 1e-12 * std::max(1.0, k_grid.back());
    }
    if (!uniform) throw std::invalid_argument("wavenumber grid must be uniform");

    std::vector<std::complex<double>> acc(m, {0.0, 0.0});
    for (double s : samples) {
        // exp(i k_j s) by repeated rotation along the uniform grid
        const std::complex<double> w = std::polar(1.0, step * s);
        std::complex<double> z(1.0, 0.0);
        for (std::size_t j = 0; j < m; ++j) {
            acc[j] += z;
            z *= w;
        }
    }
    CFCurve curve;
    curve.horizon = horizon;
    curve.scale = scale;
    curve.k.assign(k_grid.begin(), k_grid.end());
    curve.values.resize(m);
    const double n = static_cast<double>(samples.size());
    for (std::size_t j = 0; j < m; ++j) {
        curve.values[j] = std::min(1.0, std::abs(acc[j]) / n);
    }
    curve.values[0] = 1.0;
    return curve;
}

std::vector<CFCurve> horizon_curves(const std::map<std::size_t, std::vector<double>>& samples) {
    if (samples.size() < 2) throw std::invalid_argument("collapse needs at least two horizons");
    const auto& ref = samples.begin()->second;
    if (ref.size() < 2) throw std::invalid_argument("reference horizon has too few samples");
    double m = 0.0;
    for (double v : ref) m += v;
    m /= static_cast<double>(ref.size());
    double ss = 0.0;
    for (double v : ref) ss += (v - m) * (v - m);
    const double sd = std::sqrt(ss / static_cast<double>(ref.size()));
    if (!(sd > 0.0)) throw std::domain_error("reference-horizon samples have zero spread");
    const auto grid = uniform_k_grid(kWavenumberSpan / sd, kWavenumberGridPoints);
    std::vector<CFCurve> curves;
    for (const auto& [horizon, s] : samples) {
        curves.push_back(empirical_cf(s, grid, horizon, sd));
    }
    return curves;
}

namespace {

std::size_t reference_horizon(std::span<const CFCurve> curves) {
    std::size_t ref = curves.front().horizon;
    for (const auto& c : curves) ref = std::min(ref, c.horizon);
    if (ref == 0) throw std::invalid_argument("horizon must be positive");
    return ref;
}

// Wavenumber at which curve c is read for rescaled wavenumber eta.
double query_k(const CFCurve& c, double eta, double h, double t_ref) {
    return eta / (c.scale * std::pow(static_cast<double>(c.horizon) / t_ref, h));
}

std::vector<double> eta_grid(EtaBand band) {
    std::vector<double> eta(kEtaGridPoints);
    for (std::size_t i = 0; i < kEtaGridPoints; ++i) {
        eta[i] = band.lo + (band.hi - band.lo) * static_cast<double>(i) /
                               static_cast<double>(kEtaGridPoints - 1);
    }
    return eta;
}

EtaBand covered_band(std::span<const CFCurve> curves, double h, EtaBand band) {
    const double t_ref = static_cast<double>(reference_horizon(curves));
    double hi = band.hi;
    std::size_t limiting = 0;
    for (const auto& c : curves) {
        const double reach = c.k_max() * c.scale * std::pow(static_cast<double>(c.horizon) / t_ref, h);
        if (reach < hi) {
            hi = reach;
            limiting = c.horizon;
        }
    }
    if ((hi - band.lo) < kMinBandCoverage * (band.hi - band.lo)) {
        throw std::invalid_argument("eta band coverage below 60% at H=" + std::to_string(h) +
                                    ", limited by horizon " + std::to_string(limiting));
    }
    return {band.lo, hi};
}

}  // namespace

CollapseEvaluation evaluate_collapse(std::span<const CFCurve> curves, double h, EtaBand band) {
    if (curves.size() < 2) throw std::invalid_argument("collapse needs at least two horizons");
    if (!(band.hi > band.lo) || band.lo < 0.0) throw std::invalid_argument("invalid eta band");
    const EtaBand eff = covered_band(curves, h, band);
    const double t_ref = static_cast<double>(reference_horizon(curves));
    const auto eta = eta_grid(eff);
    const double nt = static_cast<double>(curves.size());
    std::vector<double> spread(eta.size());
    for (std::size_t i = 0; i < eta.size(); ++i) {
        std::vector<double> v(curves.size());
        double s = 0.0;
        for (std::size_t c = 0; c < curves.size(); ++c) {
            v[c] = curves[c].at(std::min(query_k(curves[c], eta[i], h, t_ref), curves[c].k_max()));
            s += v[c];
        }
        const double m = s / nt;
        double ss = 0.0;
        for (double x : v) ss += (x - m) * (x - m);
        spread[i] = std::sqrt(ss / nt);
    }
    double integral = 0.0;
    const double de = eta[1] - eta[0];
    for (std::size_t i = 0; i + 1 < eta.size(); ++i) {
        integral += 0.5 * de * (spread[i] + spread[i + 1]);
    }
    return {integral / (eff.hi - eff.lo), eff};
}

double collapse_score(std::span<const CFCurve> curves, double h, EtaBand band) {
    return evaluate_collapse(curves, h, band).score;
}

namespace {

double score_or_inf(std::span<const CFCurve> curves, double h, EtaBand band) {
    try {
        return collapse_score(curves, h, band);
    } catch (const std::invalid_argument&) {
        return std::numeric_limits<double>::infinity();
    }
}

}  // namespace

CollapseResult optimal_collapse(std::vector<CFCurve> curves, EtaBand band) {
    if (curves.size() < 2) throw std::invalid_argument("collapse needs at least two horizons");
    CollapseResult res;
    double best_h = 0.5;
    double best_c = std::numeric_limits<double>::infinity();
    for (int i = 5; i <= 95; ++i) {
        const double h = static_cast<double>(i) / 100.0;
        const double c = score_or_inf(curves, h, band);
        if (std::isfinite(c)) res.scan.emplace_back(h, c);
        if (c < best_c) {
            best_c = c;
            best_h = h;
        }
    }
    if (!std::isfinite(best_c)) {
        // surfaces the coverage error for the nominal exponent
        (void)collapse_score(curves, 0.5, band);
        throw std::invalid_argument("no exponent in [0.05, 0.95] covers the eta band");
    }

    // golden-section refinement on the coarse bracket
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = std::max(0.05, best_h - 0.01);
    double b = std::min(0.95, best_h + 0.01);
    double x1 = b - phi * (b - a);
    double x2 = a + phi * (b - a);
    double f1 = score_or_inf(curves, x1, band);
    double f2 = score_or_inf(curves, x2, band);
    while (b - a > 1e-3) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = score_or_inf(curves, x1, band);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = score_or_inf(curves, x2, band);
        }
    }
    const double mid = 0.5 * (a + b);
    const double f_mid = score_or_inf(curves, mid, band);
    if (f_mid < best_c) {
        best_c = f_mid;
        best_h = mid;
    }

    const auto eval = evaluate_collapse(curves, best_h, band);
    res.h_star = std::clamp(best_h, 1e-3, 1.0 - 1e-3);
    res.c_star = eval.score;
    res.eta_band = eval.band;
    res.eta = eta_grid(eval.band);
    const double t_ref = static_cast<double>(reference_horizon(curves));
    res.template_.assign(res.eta.size(), 0.0);
    for (std::size_t i = 0; i < res.eta.size(); ++i) {
        double s = 0.0;
        for (const auto& c : curves) {
            s += c.at(std::min(query_k(c, res.eta[i], best_h, t_ref), c.k_max()));
        }
        res.template_[i] = s / static_cast<double>(curves.size());
    }
    res.curves = std::move(curves);
    return res;
}

CollapseResult collapse_series(std::span<const double> x, const std::vector<std::size_t>& horizons,
                               EtaBand band) {
    std::map<std::size_t, std::vector<double>> samples;
    for (std::size_t t : horizons) {
        samples[t] = block_aggregate(x, t).values;
    }
    return optimal_collapse(horizon_curves(samples), band);
}

ModelCollapse model_collapse(const HorizonSampler& sampler, const std::vector<std::size_t>& horizons,
                             std::size_t n_samples, std::uint64_t seed,
                             std::optional<double> c_star_empirical, EtaBand band) {
    if (n_samples < 1000) {
        throw std::invalid_argument("model collapse needs at least 1000 samples per horizon");
    }
    std::map<std::size_t, std::vector<double>> samples;
    for (std::size_t i = 0; i < horizons.size(); ++i) {
        auto s = sampler(horizons[i], n_samples, seed + 7919 * (i + 1));
        if (s.size() != n_samples) throw std::runtime_error("sampler returned the wrong sample count");
        samples[horizons[i]] = std::move(s);
    }
    return {optimal_collapse(horizon_curves(samples), band), c_star_empirical};
}

}  // namespace selfsim
