#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace selfsim {

/// IID Gaussian fitted to daily increments; horizon-T law N(T mu, T var).
struct IidGaussian {
    double mu = 0.0;
    double var = 1.0;

    [[nodiscard]] double log_prob(double r, std::size_t horizon) const;
    [[nodiscard]] double cdf(double r, std::size_t horizon) const;
    [[nodiscard]] std::vector<double> sample(std::size_t horizon, std::size_t n, std::uint64_t seed) const;
};

/// Population mean/variance of `train`. Throws std::domain_error on zero variance.
[[nodiscard]] IidGaussian iid_gaussian_fit(std::span<const double> train);

/// Mean NLL of horizon-T targets under the IID fit on `train`.
[[nodiscard]] double iid_gaussian_nll(std::span<const double> train, std::span<const double> targets,
                                      std::size_t horizon);

struct GarchParams {
    double omega = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    double mu = 0.0;           ///< fixed at the train mean
    double sigma2_0 = 1.0;     ///< initial variance (train sample variance)
    double log_likelihood = 0.0;
    std::size_t n = 0;

    [[nodiscard]] double persistence() const noexcept { return alpha + beta; }
};

inline constexpr double kGarchMaxPersistence = 1.0 - 1e-6;

/// Gaussian MLE of sigma2_t = omega + alpha e_{t-1}^2 + beta sigma2_{t-1}, e = r - mean(r),
/// by Nelder-Mead on (log omega, logit persistence, logit arch share) from a 3 x 3
/// grid of starts. Throws std::invalid_argument when len < 250 and std::runtime_error
/// when no start gives a finite likelihood.
[[nodiscard]] GarchParams garch_fit(std::span<const double> train);

/// Log-likelihood of `r` under fixed params, sigma2 recursion from p.sigma2_0.
[[nodiscard]] double garch_log_likelihood(const GarchParams& p, std::span<const double> r);

/// Simulates n steps of a GARCH(1,1) with Gaussian innovations (after `burn` discarded steps).
[[nodiscard]] std::vector<double> garch_simulate(double omega, double alpha, double beta, std::size_t n,
                                                 std::uint64_t seed, std::size_t burn = 1000);

struct GarchForecast {
    std::vector<double> mean;
    std::vector<double> variance;
};

/// Horizon-T forecasts at each origin o: the target is sum(daily[o .. o+T-1]) and only
/// daily[0 .. o-1] enters the filter. Variance is the sum of the h-step forecasts.
[[nodiscard]] GarchForecast garch_forecast(const GarchParams& p, std::span<const double> daily,
                                           std::span<const std::size_t> origins, std::size_t horizon);

/// Mean Gaussian NLL of `targets` against garch_forecast at the same origins.
[[nodiscard]] double garch_nll(const GarchParams& p, std::span<const double> daily,
                               std::span<const std::size_t> origins, std::span<const double> targets,
                               std::size_t horizon);

/// Per-target Gaussian NLL, the building block of the means above.
[[nodiscard]] double gaussian_nll(double x, double mean, double var);

}  // namespace selfsim
