#include "selfsim/equivariance.hpp"

#include "selfsim/conv.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace selfsim {

using nn::BlockWeights;
using nn::Tensor;

std::vector<double> downsample2(std::span<const double> x) {
    if (x.size() % 2 != 0) {
        throw std::invalid_argument("downsample2 needs an even length, got " + std::to_string(x.size()));
    }
    std::vector<double> y(x.size() / 2);
    for (std::size_t t = 0; t < y.size(); ++t) y[t] = x[2 * t];
    return y;
}

std::vector<double> upsample2(std::span<const double> y) {
    std::vector<double> x(2 * y.size(), 0.0);
    for (std::size_t t = 0; t < y.size(); ++t) x[2 * t] = y[t];
    return x;
}

double EquivarianceReport::median_residual() const {
    if (residuals.empty()) return 0.0;
    auto v = residuals;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void to_json(nlohmann::ordered_json& j, const EquivarianceReport& r) {
    j = nlohmann::ordered_json{{"check", r.check},
                               {"trials", r.trials},
                               {"max_abs_residual", r.max_abs_residual},
                               {"median_residual", r.median_residual()},
                               {"residuals", r.residuals},
                               {"kernel", r.kernel},
                               {"channels", r.channels},
                               {"dilations", r.dilations},
                               {"input_length", r.input_length},
                               {"trim", r.trim},
                               {"tied", r.tied}};
    if (r.receptive_field > 0) {
        j["max_offending"] = r.max_offending;
        j["receptive_field"] = r.receptive_field;
    }
}

namespace {

Tensor random_tensor(std::size_t rows, std::size_t cols, double scale, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Tensor t(rows, cols);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = scale * normal(rng);
    return t;
}

Tensor downsample_cols(const Tensor& x) {
    if (x.cols() % 2 != 0) throw std::invalid_argument("downsample2 needs an even length");
    Tensor y(x.rows(), x.cols() / 2);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t t = 0; t < y.cols(); ++t) y(r, t) = x(r, 2 * t);
    }
    return y;
}

BlockWeights random_block(std::size_t c, std::size_t k, double scale, std::mt19937_64& rng) {
    const double sc = scale / std::sqrt(static_cast<double>(c * k));
    const double so = scale / std::sqrt(static_cast<double>(c));
    BlockWeights w;
    w.w_tanh = random_tensor(c, c * k, sc, rng);
    w.b_tanh = random_tensor(c, 1, 0.1 * scale, rng);
    w.w_sig = random_tensor(c, c * k, sc, rng);
    w.b_sig = random_tensor(c, 1, 0.1 * scale, rng);
    w.w_out = random_tensor(c, c, so, rng);
    w.b_out = random_tensor(c, 1, 0.1 * scale, rng);
    return w;
}

// Stack of gated blocks where level j runs at dilation 2^j with weights[j].
Tensor run_levels(Tensor x, const std::vector<BlockWeights>& weights, std::size_t first, std::size_t last,
                  std::size_t k) {
    for (std::size_t j = first; j <= last; ++j) {
        x = nn::gated_residual_block(x, weights[j], k, std::size_t{1} << j);
    }
    return x;
}

std::vector<BlockWeights> level_weights(const StackSpec& spec, std::mt19937_64& rng) {
    std::vector<BlockWeights> w;
    if (spec.tied) {
        w.assign(spec.L + 1, random_block(spec.channels, spec.kernel, spec.weight_scale, rng));
    } else {
        for (std::size_t j = 0; j <= spec.L; ++j) w.push_back(random_block(spec.channels, spec.kernel, spec.weight_scale, rng));
    }
    return w;
}

void check_stack(const StackSpec& spec) {
    if (spec.L < 1) throw std::invalid_argument("stack depth must be >= 1");
    if (spec.kernel < 2) throw std::invalid_argument("kernel size must be >= 2");
    if (spec.channels < 1) throw std::invalid_argument("channels must be >= 1");
}

EquivarianceReport stack_report(const StackSpec& spec, std::size_t length, std::size_t trim, std::size_t trials,
                                const char* name) {
    EquivarianceReport rep;
    rep.check = name;
    rep.trials = trials;
    rep.kernel = spec.kernel;
    rep.channels = spec.channels;
    for (std::size_t j = 1; j <= spec.L; ++j) rep.dilations.push_back(std::size_t{1} << j);
    rep.input_length = length;
    rep.trim = trim;
    rep.tied = spec.tied;
    return rep;
}

}  // namespace

EquivarianceReport verify_prop1(std::size_t kernel, std::size_t channels, std::size_t length,
                                std::vector<std::size_t> dilations, std::size_t trials, std::uint64_t seed,
                                bool control, bool zero_input) {
    if (length % 2 != 0) throw std::invalid_argument("input length must be even");
    if (kernel < 1 || channels < 1) throw std::invalid_argument("kernel and channels must be positive");
    if (dilations.empty()) throw std::invalid_argument("at least one dilation is required");
    EquivarianceReport rep;
    rep.check = control ? "prop1_control" : "prop1";
    rep.trials = trials;
    rep.kernel = kernel;
    rep.channels = channels;
    rep.dilations = dilations;
    rep.input_length = length;
    rep.tied = !control;
    std::mt19937_64 rng(seed);
    for (std::size_t trial = 0; trial < trials; ++trial) {
        const Tensor w = random_tensor(channels, channels * kernel, 1.0, rng);
        const Tensor b = random_tensor(channels, 1, 1.0, rng);
        const Tensor w2 = control ? random_tensor(channels, channels * kernel, 1.0, rng) : w;
        const Tensor x = zero_input ? Tensor(channels, length) : random_tensor(channels, length, 1.0, rng);
        const Tensor xd = downsample_cols(x);
        double worst = 0.0;
        for (std::size_t d : dilations) {
            const Tensor fine = nn::causal_dilated_conv(x, w, b, kernel, 2 * d);
            const Tensor coarse = nn::causal_dilated_conv(xd, w2, b, kernel, d);
            for (std::size_t r = 0; r < channels; ++r) {
                for (std::size_t t = 0; t < coarse.cols(); ++t) {
                    worst = std::max(worst, std::fabs(fine(r, 2 * t) - coarse(r, t)));
                }
            }
        }
        rep.residuals.push_back(worst);
        rep.max_abs_residual = std::max(rep.max_abs_residual, worst);
    }
    return rep;
}

EquivarianceReport verify_corollary1(const StackSpec& spec, std::size_t length, std::size_t trim,
                                     std::size_t trials, std::uint64_t seed) {
    check_stack(spec);
    const std::size_t required = (spec.kernel - 1) * (std::size_t{1} << spec.L);
    if (trim < required) {
        throw std::invalid_argument("trim b = " + std::to_string(trim) + " is below the receptive field; need b >= " +
                                    std::to_string(required));
    }
    if (length % 2 != 0) throw std::invalid_argument("input length must be even");
    if (length <= 4 * trim) {
        throw std::invalid_argument("input length " + std::to_string(length) + " must exceed 4 b = " +
                                    std::to_string(4 * trim));
    }
    auto rep = stack_report(spec, length, trim, trials, spec.tied ? "corollary1" : "corollary1_control");
    std::mt19937_64 rng(seed);
    const std::size_t n = length / 2;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        const auto weights = level_weights(spec, rng);
        const Tensor x = random_tensor(spec.channels, length, 1.0, rng);
        const Tensor fine = run_levels(x, weights, 1, spec.L, spec.kernel);
        const Tensor coarse = run_levels(downsample_cols(x), weights, 0, spec.L - 1, spec.kernel);
        double worst = 0.0;
        for (std::size_t r = 0; r < spec.channels; ++r) {
            for (std::size_t t = trim; t < n - trim; ++t) {
                worst = std::max(worst, std::fabs(fine(r, 2 * t) - coarse(r, t)));
            }
        }
        rep.residuals.push_back(worst);
        rep.max_abs_residual = std::max(rep.max_abs_residual, worst);
    }
    return rep;
}

EquivarianceReport verify_boundary_confinement(const StackSpec& spec, std::size_t length, std::size_t history,
                                               std::size_t trials, std::uint64_t seed) {
    check_stack(spec);
    if (length % 2 != 0 || history % 2 != 0) throw std::invalid_argument("lengths must be even");
    auto rep = stack_report(spec, length, 0, trials, "boundary_confinement");
    rep.receptive_field = 1 + (spec.kernel - 1) * ((std::size_t{1} << spec.L) - 1);
    std::mt19937_64 rng(seed);
    const std::size_t n = length / 2;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        const auto weights = level_weights(spec, rng);
        const Tensor full = random_tensor(spec.channels, history + length, 1.0, rng);
        Tensor x(spec.channels, length);
        for (std::size_t r = 0; r < spec.channels; ++r) {
            std::copy(full.row(r) + history, full.row(r) + history + length, x.row(r));
        }
        const Tensor fine = run_levels(full, weights, 1, spec.L, spec.kernel);
        const Tensor coarse = run_levels(downsample_cols(x), weights, 0, spec.L - 1, spec.kernel);
        double worst = 0.0;
        std::size_t last_bad = 0;
        for (std::size_t t = 0; t < n; ++t) {
            for (std::size_t r = 0; r < spec.channels; ++r) {
                const double d = std::fabs(fine(r, history + 2 * t) - coarse(r, t));
                worst = std::max(worst, d);
                if (d != 0.0) last_bad = std::max(last_bad, t + 1);
            }
        }
        rep.residuals.push_back(worst);
        rep.max_abs_residual = std::max(rep.max_abs_residual, worst);
        rep.max_offending = std::max(rep.max_offending, last_bad);
    }
    return rep;
}

}  // namespace selfsim
