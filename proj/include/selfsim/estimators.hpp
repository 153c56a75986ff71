#pragma once

#include "selfsim/series.hpp"

#include <string>
#include <vector>

namespace selfsim {

enum class HurstMethod { rs, avar, collapse };

[[nodiscard]] const char* to_string(HurstMethod m);

/// A Hurst-type estimate with the log-log points it was fitted on.
struct HurstEstimate {
    HurstMethod method = HurstMethod::rs;
    double value = 0.5;
    double slope = 0.0;
    double intercept = 0.0;
    std::vector<double> log_sizes;
    std::vector<double> log_stats;
};

struct RsOptions {
    std::size_t min_window = 16;  ///< smallest dyadic block length
    std::size_t max_divisor = 4;  ///< largest block length is len / max_divisor
};

/// Rescaled-range estimate. Block lengths are 16, 32, ... up to len/4; each
/// length averages R/S over non-overlapping blocks (zero-std blocks skipped).
/// The slope of log(R/S) on log(n) is clipped into (0, 1).
/// Throws std::invalid_argument when fewer than three block lengths survive.
[[nodiscard]] HurstEstimate rs_hurst(std::span<const double> x, const RsOptions& opts = {});

/// Half the mean squared difference of consecutive non-overlapping tau-block means.
[[nodiscard]] double allan_variance(std::span<const double> x, std::size_t tau);

/// H_av = (1 + s) / 2 where s is the log-log slope of AVAR(tau) against tau.
/// Not clamped.
[[nodiscard]] HurstEstimate avar_hurst(std::span<const double> x,
                                       const std::vector<std::size_t>& taus = {21, 63, 252});

/// m4 / m2^2 - 3 with population moments.
[[nodiscard]] double excess_kurtosis(std::span<const double> x);

inline constexpr double kKurtosisCutoff = 25.0;
inline constexpr std::size_t kRhoTau = 63;

struct FScoreRow {
    std::string ticker;
    double rho = 1.0;
    double h_av = 0.0;
    double excess_kurtosis = 0.0;
    double f = 0.0;
    bool excluded = false;  ///< excess kurtosis above the pre-filter cutoff
};

/// F = -log10(rho) - max(0, H_av) - 0.05 * kurt.
[[nodiscard]] double fscore_value(double rho, double h_av, double kurt);

/// Builds the ranking row for one series (needs at least 504 samples).
[[nodiscard]] FScoreRow fscore(const TimeSeries& x);

/// The `top_k` eligible tickers in descending F order, ties broken by name.
[[nodiscard]] std::vector<FScoreRow> rank_universe(const Panel& panel, std::size_t top_k);

}  // namespace selfsim
