#pragma once

#include <functional>
#include <optional>
#include <span>

namespace selfsim {

/// sup_u |F_n(u) - u| of PIT values. Throws std::invalid_argument with fewer than 20 values.
[[nodiscard]] double ks_distance(std::span<const double> pit);

/// PIT form: u_i = cdf(targets[i]).
[[nodiscard]] double ks_distance(const std::function<double(double)>& cdf, std::span<const double> targets);

/// Two-sample statistic sup |F_a - F_b|; identical samples give 0.
[[nodiscard]] double ks_two_sample(std::span<const double> a, std::span<const double> b);

/// Energy distance 2 E|X - Y| - E|X - X'| - E|Y - Y'| (V-statistics) restricted to
/// {|v| > 2 sigma} on both sides. Empty tail on either side gives nullopt.
[[nodiscard]] std::optional<double> tail_energy_distance(std::span<const double> samples,
                                                         std::span<const double> targets, double sigma);

/// Plain energy distance of two non-empty samples.
[[nodiscard]] double energy_distance(std::span<const double> a, std::span<const double> b);

}  // namespace selfsim
