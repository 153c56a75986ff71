#pragma once

#include <span>
#include <string>
#include <vector>

namespace selfsim {

/// One-sided Welch estimate in cycles/sample. Bins are f = j / segment for
/// j = 1 .. segment/2, so sum(S) * df approximates the variance of the input.
struct Psd {
    std::vector<double> f;
    std::vector<double> s;
    std::size_t segment = 0;
    std::size_t segments_averaged = 0;
};

struct FrequencyBand {
    double lo = 0.0;
    double hi = 0.5;
};

/// Default inertial band [4 / segment, 0.25].
[[nodiscard]] FrequencyBand default_band(std::size_t segment);

/// Hann-windowed, mean-detrended, averaged periodograms.
/// Throws std::invalid_argument unless len(x) >= segment >= 16 and 0 <= overlap < 1.
[[nodiscard]] Psd welch_psd(std::span<const double> x, std::size_t segment = 256, double overlap = 0.5);

/// Averages the Welch periodograms of several equal-length trajectories.
[[nodiscard]] Psd welch_psd_batch(std::span<const std::vector<double>> batch, std::size_t segment = 256,
                                  double overlap = 0.5);

struct SlopeFit {
    double beta = 0.0;       ///< S ~ f^{-beta}
    double intercept = 0.0;  ///< log S = intercept - beta * log f
    std::size_t bins = 0;
};

/// Least squares of log S on -log f over bins inside the band (needs >= 5 bins).
[[nodiscard]] SlopeFit spectral_slope(const Psd& psd, FrequencyBand band);

enum class SpectralMode { welch, variance_surrogate, off };

[[nodiscard]] SpectralMode parse_spectral_mode(const std::string& name);
[[nodiscard]] const char* to_string(SpectralMode m);

struct SpectralOptions {
    std::size_t segment = 256;
    double overlap = 0.5;
    double lambda_shape = 0.1;
    FrequencyBand band{0.0, 0.0};  ///< lo == hi selects default_band(segment)
};

/// Spectral-consistency fit of a generated batch against the target exponent
/// beta* = 2 H - 1.
///
/// The target shape S* = exp(a*) f^{-beta*} uses the intercept a* that best fits
/// log S at the fixed slope beta*, so the shape term is blind to the level of
/// the batch. In welch mode `grad` holds dLoss/dsample with the batch's layout;
/// the variance surrogate `(Var(targets) - 1)^2` carries no gradient and `grad`
/// stays empty.
struct SpectralLoss {
    SpectralMode mode = SpectralMode::off;
    double value = 0.0;
    double slope_term = 0.0;
    double shape_term = 0.0;
    double beta_hat = 0.0;
    double beta_target = 0.0;
    double intercept = 0.0;
    FrequencyBand band;
    Psd psd;
    std::vector<std::vector<double>> grad;
};

/// Welch mode: `batch` is >= 8 generated trajectories of length >= 64.
[[nodiscard]] SpectralLoss spectral_loss_welch(std::span<const std::vector<double>> batch, double h_hat,
                                               const SpectralOptions& opts = {});

/// Pilot surrogate on the target batch: (population variance - 1)^2.
[[nodiscard]] SpectralLoss spectral_loss_surrogate(std::span<const double> targets);

}  // namespace selfsim
