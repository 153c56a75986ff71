#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace selfsim {

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
    std::string method;
};

struct ConfidenceInterval {
    double lo = 0.0;
    double hi = 0.0;
    double estimate = 0.0;
};

/// Circular block bootstrap of the mean with a percentile interval.
/// Throws std::invalid_argument unless len >= 2 * block_len.
[[nodiscard]] ConfidenceInterval block_bootstrap_ci(std::span<const double> losses, std::size_t block_len = 21,
                                                    std::size_t resamples = 1000, double level = 0.95,
                                                    std::uint64_t seed = 0);

/// Two-sided signed-rank test. Exact zeros are dropped and ties share the average rank.
/// Exact null distribution up to n = 50, normal approximation with tie correction above.
/// Throws std::invalid_argument when fewer than 5 non-zero deltas remain.
[[nodiscard]] TestResult wilcoxon_signed_rank(std::span<const double> deltas);

/// Average ranks (1-based) of |deltas|, as used by the test above.
[[nodiscard]] std::vector<double> signed_rank_magnitudes(std::span<const double> deltas);

struct HolmResult {
    std::vector<double> adjusted;
    std::vector<bool> reject;
};

/// Step-down Holm adjustment, returned in input order.
[[nodiscard]] HolmResult holm_bonferroni(std::span<const double> p_values, double alpha = 0.05);

}  // namespace selfsim
