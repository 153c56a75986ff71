#pragma once

#include "selfsim/fgn.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace selfsim {

/// |empirical characteristic function| of one horizon's samples on a uniform
/// wavenumber grid starting at 0.
///
/// `scale` is the unit of the rescaled wavenumber: the collapse diagnostic reads
/// the curve at k = eta / (scale * (T / T_ref)^H), so eta is measured in units
/// of the reference-horizon standard deviation.
struct CFCurve {
    std::size_t horizon = 1;
    std::vector<double> k;
    std::vector<double> values;
    double scale = 1.0;

    [[nodiscard]] double k_max() const { return k.back(); }
    /// Linear interpolation; throws std::out_of_range outside [0, k_max].
    [[nodiscard]] double at(double kq) const;
};

struct EtaBand {
    double lo = 0.5;
    double hi = 3.0;
};

inline constexpr std::size_t kEtaGridPoints = 256;
inline constexpr std::size_t kWavenumberGridPoints = 512;
inline constexpr double kWavenumberSpan = 8.0;
inline constexpr double kMinBandCoverage = 0.6;

/// Uniform grid of `points` wavenumbers on [0, k_max].
[[nodiscard]] std::vector<double> uniform_k_grid(double k_max, std::size_t points);

/// |mean exp(i k s)| over the samples. Needs at least 100 samples and a grid starting at 0.
[[nodiscard]] CFCurve empirical_cf(std::span<const double> samples, std::span<const double> k_grid,
                                   std::size_t horizon = 1, double scale = 1.0);

/// Curves for each horizon on a shared grid [0, 8 / sd_ref], where sd_ref is the
/// sample standard deviation at the smallest horizon.
[[nodiscard]] std::vector<CFCurve> horizon_curves(const std::map<std::size_t, std::vector<double>>& samples);

struct CollapseEvaluation {
    double score = 0.0;
    EtaBand band;  ///< band actually integrated (may be shrunk from the nominal one)
};

/// Band-averaged across-horizon (population) std of the rescaled curves.
/// Throws std::invalid_argument when fewer than 60% of the nominal band is covered.
[[nodiscard]] CollapseEvaluation evaluate_collapse(std::span<const CFCurve> curves, double h,
                                                   EtaBand band = {});
[[nodiscard]] double collapse_score(std::span<const CFCurve> curves, double h, EtaBand band = {});

struct CollapseResult {
    double h_star = 0.5;
    double c_star = 0.0;
    EtaBand eta_band;
    std::vector<CFCurve> curves;
    std::vector<double> eta;       ///< quadrature grid on the band
    std::vector<double> template_; ///< across-horizon mean of rescaled curves at h_star
    std::vector<std::pair<double, double>> scan;  ///< (H, C(H)) coarse scan, infeasible H omitted
};

/// Coarse scan over H = 0.05, 0.06, ..., 0.95 then golden-section refinement to 1e-3.
[[nodiscard]] CollapseResult optimal_collapse(std::vector<CFCurve> curves, EtaBand band = {});

/// Disjoint T-aggregates of x for each horizon, then optimal_collapse.
[[nodiscard]] CollapseResult collapse_series(std::span<const double> x,
                                             const std::vector<std::size_t>& horizons,
                                             EtaBand band = {});

/// Draws n samples of the horizon-T aggregate. Implementations must be deterministic in the seed.
using HorizonSampler = std::function<std::vector<double>(std::size_t horizon, std::size_t n,
                                                         std::uint64_t seed)>;

struct ModelCollapse {
    CollapseResult model;
    std::optional<double> c_star_empirical;
};

/// Runs the collapse diagnostic on samples drawn from a generative model.
/// Requires n_samples >= 1000 per horizon.
[[nodiscard]] ModelCollapse model_collapse(const HorizonSampler& sampler,
                                           const std::vector<std::size_t>& horizons,
                                           std::size_t n_samples, std::uint64_t seed,
                                           std::optional<double> c_star_empirical = std::nullopt,
                                           EtaBand band = {});

}  // namespace selfsim
