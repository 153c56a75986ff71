#include "selfsim/estimators.hpp"

#include "selfsim/linfit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace selfsim {

const char* to_string(HurstMethod m) {
    switch (m) {
        case HurstMethod::rs: return "RS";
        case HurstMethod::avar: return "AVAR";
        case HurstMethod::collapse: return "COLLAPSE";
    }
    return "?";
}

namespace {

constexpr double kClipLo = 1e-3;
constexpr double kClipHi = 1.0 - 1e-3;

// Rescaled range of one block; negative when the block has zero spread.
double block_rescaled_range(std::span<const double> block) {
    const double n = static_cast<double>(block.size());
    double m = 0.0;
    for (double v : block) m += v;
    m /= n;
    double cum = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    double ss = 0.0;
    for (double v : block) {
        cum += v - m;
        lo = std::min(lo, cum);
        hi = std::max(hi, cum);
        ss += (v - m) * (v - m);
    }
    const double sd = std::sqrt(ss / n);
    if (!(sd > 0.0)) return -1.0;
    return (hi - lo) / sd;
}

}  // namespace

HurstEstimate rs_hurst(std::span<const double> x, const RsOptions& opts) {
    if (x.size() < 64) {
        throw std::invalid_argument("R/S analysis needs at least 64 samples, have " +
                                    std::to_string(x.size()));
    }
    HurstEstimate est;
    est.method = HurstMethod::rs;
    const std::size_t largest = x.size() / opts.max_divisor;
    for (std::size_t n = opts.min_window; n <= largest; n *= 2) {
        double sum = 0.0;
        std::size_t used = 0;
        for (std::size_t b = 0; (b + 1) * n <= x.size(); ++b) {
            const double rs = block_rescaled_range(x.subspan(b * n, n));
            if (rs < 0.0) continue;
            sum += rs;
            ++used;
        }
        if (used == 0 || !(sum > 0.0)) continue;
        est.log_sizes.push_back(std::log(static_cast<double>(n)));
        est.log_stats.push_back(std::log(sum / static_cast<double>(used)));
    }
    if (est.log_sizes.size() < 3) {
        throw std::invalid_argument("R/S analysis: fewer than 3 usable block sizes");
    }
    const auto fit = fit_line(est.log_sizes, est.log_stats);
    est.slope = fit.slope;
    est.intercept = fit.intercept;
    est.value = std::clamp(fit.slope, kClipLo, kClipHi);
    return est;
}

double allan_variance(std::span<const double> x, std::size_t tau) {
    if (tau == 0) throw std::invalid_argument("Allan variance block length must be positive");
    const std::size_t blocks = x.size() / tau;
    if (blocks < 2) {
        throw std::invalid_argument("Allan variance at tau=" + std::to_string(tau) +
                                    " needs at least " + std::to_string(2 * tau) + " samples");
    }
    std::vector<double> means(blocks);
    for (std::size_t b = 0; b < blocks; ++b) {
        double s = 0.0;
        for (std::size_t u = b * tau; u < (b + 1) * tau; ++u) s += x[u];
        means[b] = s / static_cast<double>(tau);
    }
    double acc = 0.0;
    for (std::size_t b = 0; b + 1 < blocks; ++b) {
        const double d = means[b + 1] - means[b];
        acc += d * d;
    }
    return 0.5 * acc / static_cast<double>(blocks - 1);
}

HurstEstimate avar_hurst(std::span<const double> x, const std::vector<std::size_t>& taus) {
    if (taus.size() < 2) throw std::invalid_argument("AVAR slope needs at least two block lengths");
    const std::size_t tau_max = *std::max_element(taus.begin(), taus.end());
    if (x.size() < 2 * tau_max) {
        throw std::invalid_argument("AVAR Hurst estimate needs at least " + std::to_string(2 * tau_max) +
                                    " samples, have " + std::to_string(x.size()));
    }
    HurstEstimate est;
    est.method = HurstMethod::avar;
    for (std::size_t tau : taus) {
        const double av = allan_variance(x, tau);
        if (!(av > 0.0)) {
            throw std::domain_error("Allan variance is zero at tau=" + std::to_string(tau));
        }
        est.log_sizes.push_back(std::log(static_cast<double>(tau)));
        est.log_stats.push_back(std::log(av));
    }
    const auto fit = fit_line(est.log_sizes, est.log_stats);
    est.slope = fit.slope;
    est.intercept = fit.intercept;
    est.value = 0.5 * (1.0 + fit.slope);
    return est;
}

double excess_kurtosis(std::span<const double> x) {
    if (x.size() < 4) throw std::invalid_argument("kurtosis needs at least 4 samples");
    const double m = mean(x);
    double m2 = 0.0;
    double m4 = 0.0;
    for (double v : x) {
        const double d = (v - m) * (v - m);
        m2 += d;
        m4 += d * d;
    }
    const double n = static_cast<double>(x.size());
    m2 /= n;
    m4 /= n;
    if (!(m2 > 0.0)) throw std::domain_error("kurtosis of a zero-variance series");
    return m4 / (m2 * m2) - 3.0;
}

double fscore_value(double rho, double h_av, double kurt) {
    return -std::log10(rho) - std::max(0.0, h_av) - 0.05 * kurt;
}

FScoreRow fscore(const TimeSeries& x) {
    if (x.size() < 504) {
        throw std::invalid_argument("F-score of '" + x.id() + "' needs at least 504 samples, have " +
                                    std::to_string(x.size()));
    }
    const auto v = x.values();
    const double var = variance(v);
    if (!(var > 0.0)) throw std::domain_error("F-score of zero-variance series '" + x.id() + "'");
    FScoreRow row;
    row.ticker = x.id();
    row.rho = static_cast<double>(kRhoTau) * allan_variance(v, kRhoTau) / var;
    row.h_av = avar_hurst(v).value;
    row.excess_kurtosis = excess_kurtosis(v);
    row.f = fscore_value(row.rho, row.h_av, row.excess_kurtosis);
    row.excluded = row.excess_kurtosis > kKurtosisCutoff;
    return row;
}

std::vector<FScoreRow> rank_universe(const Panel& panel, std::size_t top_k) {
    std::vector<FScoreRow> eligible;
    std::vector<std::string> excluded;
    for (const auto& [ticker, ps] : panel) {
        auto row = fscore(ps.series);
        row.ticker = ticker;
        if (row.excluded) {
            excluded.push_back(ticker);
        } else {
            eligible.push_back(std::move(row));
        }
    }
    if (eligible.size() < top_k || eligible.empty()) {
        std::ostringstream msg;
        msg << "only " << eligible.size() << " eligible tickers for top-" << top_k
            << "; excluded by kurtosis filter:";
        for (const auto& t : excluded) msg << ' ' << t;
        throw std::invalid_argument(msg.str());
    }
    std::sort(eligible.begin(), eligible.end(), [](const FScoreRow& a, const FScoreRow& b) {
        if (a.f != b.f) return a.f > b.f;
        return a.ticker < b.ticker;
    });
    eligible.resize(top_k);
    return eligible;
}

}  // namespace selfsim
