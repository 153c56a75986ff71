#include "selfsim/significance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace selfsim {

namespace {

double percentile(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    if (frac == 0.0) return sorted[lo];
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

ConfidenceInterval block_bootstrap_ci(std::span<const double> losses, std::size_t block_len, std::size_t resamples,
                                      double level, std::uint64_t seed) {
    if (block_len == 0) throw std::invalid_argument("block length must be positive");
    if (losses.size() < 2 * block_len) {
        throw std::invalid_argument("block bootstrap needs at least " + std::to_string(2 * block_len) +
                                    " observations, got " + std::to_string(losses.size()));
    }
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("confidence level must be in (0, 1)");
    if (resamples < 2) throw std::invalid_argument("need at least 2 resamples");
    const std::size_t n = losses.size();
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> start(0, n - 1);
    std::vector<double> means(resamples);
    for (auto& m : means) {
        double s = 0.0;
        std::size_t taken = 0;
        while (taken < n) {
            const std::size_t b = start(rng);
            for (std::size_t j = 0; j < block_len && taken < n; ++j, ++taken) s += losses[(b + j) % n];
        }
        m = s / static_cast<double>(n);
    }
    std::sort(means.begin(), means.end());
    ConfidenceInterval ci;
    ci.lo = percentile(means, 0.5 * (1.0 - level));
    ci.hi = percentile(means, 1.0 - 0.5 * (1.0 - level));
    ci.estimate = std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(n);
    return ci;
}

std::vector<double> signed_rank_magnitudes(std::span<const double> deltas) {
    const std::size_t n = deltas.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return std::fabs(deltas[a]) < std::fabs(deltas[b]); });
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && std::fabs(deltas[order[j + 1]]) == std::fabs(deltas[order[i]])) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

TestResult wilcoxon_signed_rank(std::span<const double> deltas) {
    std::vector<double> d;
    for (double v : deltas) {
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite delta");
        if (v != 0.0) d.push_back(v);
    }
    if (d.size() < 5) {
        throw std::invalid_argument("Wilcoxon test needs at least 5 non-zero deltas, got " + std::to_string(d.size()));
    }
    const auto ranks = signed_rank_magnitudes(d);
    const std::size_t n = d.size();
    TestResult res;
    res.n = n;
    double w_plus = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (d[i] > 0.0) w_plus += ranks[i];
    }
    res.statistic = w_plus;

    if (n <= 50) {
        res.method = "wilcoxon_exact";
        // doubled ranks are integers even with ties
        std::vector<std::size_t> r2(n);
        std::size_t total = 0;
        for (std::size_t i = 0; i < n; ++i) {
            r2[i] = static_cast<std::size_t>(std::llround(2.0 * ranks[i]));
            total += r2[i];
        }
        std::vector<double> count(total + 1, 0.0);
        count[0] = 1.0;
        std::size_t reach = 0;
        for (std::size_t r : r2) {
            for (std::size_t s = reach + 1; s-- > 0;) {
                if (count[s] != 0.0) count[s + r] += count[s];
            }
            reach += r;
        }
        const auto w2 = static_cast<std::size_t>(std::llround(2.0 * w_plus));
        double le = 0.0;
        double ge = 0.0;
        for (std::size_t s = 0; s <= total; ++s) {
            if (s <= w2) le += count[s];
            if (s >= w2) ge += count[s];
        }
        const double all = std::ldexp(1.0, static_cast<int>(n));
        res.p_value = std::min(1.0, 2.0 * std::min(le, ge) / all);
        return res;
    }

    res.method = "wilcoxon_normal";
    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
    // tie correction
    auto sorted = ranks;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && sorted[j + 1] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i + 1);
        var -= (t * t * t - t) / 48.0;
        i = j + 1;
    }
    const double z = (w_plus - mean) / std::sqrt(var);
    res.p_value = std::min(1.0, std::erfc(std::fabs(z) / std::sqrt(2.0)));
    return res;
}

HolmResult holm_bonferroni(std::span<const double> p_values, double alpha) {
    const std::size_t m = p_values.size();
    for (double p : p_values) {
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p-values must lie in [0, 1]");
    }
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
    HolmResult out;
    out.adjusted.assign(m, 0.0);
    out.reject.assign(m, false);
    double running = 0.0;
    bool still_rejecting = true;
    for (std::size_t k = 0; k < m; ++k) {
        const std::size_t i = order[k];
        running = std::max(running, std::min(1.0, static_cast<double>(m - k) * p_values[i]));
        out.adjusted[i] = running;
        still_rejecting = still_rejecting && running <= alpha;
        out.reject[i] = still_rejecting;
    }
    return out;
}

}  // namespace selfsim
