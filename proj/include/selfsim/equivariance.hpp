#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace selfsim {

/// (D2 x)_t = x_{2t}. Throws std::invalid_argument on odd length.
[[nodiscard]] std::vector<double> downsample2(std::span<const double> x);
/// (U2 y)_{2t} = y_t, (U2 y)_{2t+1} = 0.
[[nodiscard]] std::vector<double> upsample2(std::span<const double> y);

struct EquivarianceReport {
    std::string check;
    std::size_t trials = 0;
    double max_abs_residual = 0.0;
    std::vector<double> residuals;
    std::size_t kernel = 0;
    std::size_t channels = 0;
    std::vector<std::size_t> dilations;
    std::size_t input_length = 0;
    std::size_t trim = 0;
    bool tied = true;
    /// Boundary check only: widest run of nonzero residual indices at the left edge.
    std::size_t max_offending = 0;
    std::size_t receptive_field = 0;

    [[nodiscard]] double median_residual() const;
};

void to_json(nlohmann::ordered_json& j, const EquivarianceReport& r);

/// Per trial, draws a C -> C kernel (with bias) and a length-`length` input, then compares
/// f_{w,2d}(x) at even indices with f_{w,d}(D2 x) for every d in `dilations`.
/// With `control` set, the coarse side uses an independent kernel.
[[nodiscard]] EquivarianceReport verify_prop1(std::size_t kernel, std::size_t channels, std::size_t length,
                                              std::vector<std::size_t> dilations, std::size_t trials,
                                              std::uint64_t seed, bool control = false,
                                              bool zero_input = false);

struct StackSpec {
    std::size_t L = 3;
    std::size_t kernel = 3;
    std::size_t channels = 8;
    bool tied = true;
    double weight_scale = 1.0;  ///< 0 gives identity blocks
};

/// Compares the L-block stack at dilations 2 .. 2^L on x (length `length`, even) with the
/// stack at dilations 1 .. 2^{L-1} on D2 x, over coarse indices [b, length/2 - b).
/// Untied stacks give level j its own kernel, so both sides use different kernels.
/// Throws std::invalid_argument if b < (k - 1) 2^L or length <= 4 b.
[[nodiscard]] EquivarianceReport verify_corollary1(const StackSpec& spec, std::size_t length, std::size_t trim,
                                                   std::size_t trials, std::uint64_t seed);

/// Same comparison with mismatched edge handling: the fine path sees `history` extra
/// samples before x, the coarse path zero padding. Residuals may only appear at the
/// first receptive-field coarse indices; max_offending records the widest such run.
[[nodiscard]] EquivarianceReport verify_boundary_confinement(const StackSpec& spec, std::size_t length,
                                                             std::size_t history, std::size_t trials,
                                                             std::uint64_t seed);

}  // namespace selfsim
