#pragma once

#include "selfsim/autodiff.hpp"
#include "selfsim/conv.hpp"
#include "selfsim/spectral.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace selfsim::nn {

enum class HeadKind { flow, gaussian };

[[nodiscard]] const char* to_string(HeadKind h);
[[nodiscard]] HeadKind parse_head_kind(const std::string& name);

struct ModelConfig {
    std::size_t L = 4;  ///< depth; dilations 2^0 .. 2^{L-1}. L = 0 is a degenerate projection-only model.
    std::size_t n_filters = 16;
    std::size_t kernel_size = 3;
    std::size_t flow_layers = 3;
    bool weight_tied = true;
    bool use_dwt = true;
    bool use_film = true;
    HeadKind head = HeadKind::flow;
    SpectralMode spec_loss = SpectralMode::variance_surrogate;
    double lambda_spec = 0.05;  ///< pilot weight; 0.1 at full scale
    double lambda_shape = 0.1;

    /// Throws std::invalid_argument on kernel_size < 2, flow_layers < 1, n_filters < 1 or L > 16.
    void validate() const;
    [[nodiscard]] std::size_t in_channels() const noexcept { return use_dwt ? 2 : 1; }
    /// 1 + (k - 1)(2^L - 1) steps of the (possibly DWT-halved) input stream.
    [[nodiscard]] std::size_t receptive_field() const noexcept;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

void to_json(nlohmann::ordered_json& j, const ModelConfig& c);
void from_json(const nlohmann::ordered_json& j, ModelConfig& c);

/// Dilated residual-block parameters only: per block 2 (n_f^2 k + n_f) + n_f^2 + n_f,
/// times L when untied.
[[nodiscard]] std::size_t conv_param_count(const ModelConfig& c);

/// One {W_tanh, W_sig, W_o} triple (with biases) bound to a tape.
struct BlockVars {
    Var w_tanh, b_tanh, w_sig, b_sig, w_out, b_out;
};

/// Per-channel modulation, C x 1 each.
struct FilmVars {
    Var gamma, beta;
};

/// Gated residual block followed by optional FiLM. `film` may be null.
[[nodiscard]] Var sewn_block(Var x, const BlockVars& shared, std::size_t kernel, std::size_t dilation,
                             const FilmVars* film);
/// Same computation with level-private parameters.
[[nodiscard]] Var wavenet_block(Var x, const BlockVars& own, std::size_t kernel, std::size_t dilation,
                                const FilmVars* film);

/// Monotone scalar transform r = g(z; theta) assembled from conditioner outputs.
///
/// theta holds (s_k, t_k) pairs. Layers 0 .. K-2 act as u -> sinh(e^{s} asinh(u) + t),
/// the last layer is u -> e^{s} u + t, and the result is multiplied by sqrt(T).
/// A Gaussian head is the K = 1 case. All-zero theta gives r = sqrt(T) z.
class FlowTransform {
public:
    FlowTransform(std::vector<double> theta, std::size_t horizon);

    [[nodiscard]] double forward(double z) const;
    struct Inverse {
        double z;
        double log_det;  ///< log |dz/dr|
    };
    [[nodiscard]] Inverse inverse(double r) const;
    [[nodiscard]] double log_prob(double r) const;
    [[nodiscard]] double cdf(double r) const;
    [[nodiscard]] std::size_t layers() const noexcept { return theta_.size() / 2; }

private:
    std::vector<double> theta_;
    double sqrt_t_;
};

/// log p(r) under the flow defined by a theta column var (2K x 1), recorded on the tape.
[[nodiscard]] Var flow_log_prob(Var theta, double r, std::size_t horizon);
/// The generated value g(z; theta) as a tape var, differentiable in theta.
[[nodiscard]] Var flow_push(Var theta, double z, std::size_t horizon);

/// Parameters of one model bound to a single tape.
struct BoundModel {
    Var in_w, in_b;
    std::vector<BlockVars> blocks;  ///< one entry when tied
    std::optional<std::array<Var, 4>> film;
    std::array<Var, 4> head;
};

class Model {
public:
    /// Builds and initialises parameters. Conditioner and FiLM output layers start
    /// at zero, so a fresh model predicts N(0, T).
    Model(ModelConfig config, std::uint64_t seed);
    /// Wraps existing parameters (checkpoint load). Throws if names or shapes disagree.
    Model(ModelConfig config, ParamStore params);

    [[nodiscard]] const ModelConfig& config() const noexcept { return config_; }
    [[nodiscard]] ParamStore& params() noexcept { return params_; }
    [[nodiscard]] const ParamStore& params() const noexcept { return params_; }

    /// Puts every parameter on the tape. Frozen binding records them as constants,
    /// which skips gradient bookkeeping for inference.
    [[nodiscard]] BoundModel bind(Tape& tape, bool frozen = false);

    /// FiLM (gamma, beta) for this H estimate; identity when use_film is off.
    [[nodiscard]] std::optional<FilmVars> film(Tape& tape, const BoundModel& m, double h_hat) const;
    /// c_T for one window (n_filters x 1).
    [[nodiscard]] Var context(Tape& tape, const BoundModel& m, std::span<const double> window,
                              double h_hat) const;
    /// Conditioner output theta (2K x 1 for the flow head, 2 x 1 for the Gaussian head).
    [[nodiscard]] Var theta(Tape& tape, const BoundModel& m, Var context, double h_hat) const;

    // Convenience evaluations on a throwaway tape.
    [[nodiscard]] std::vector<double> context_value(std::span<const double> window, double h_hat);
    [[nodiscard]] FlowTransform predictive(std::span<const double> window, double h_hat, std::size_t horizon);
    [[nodiscard]] double log_prob(std::span<const double> window, double h_hat, double r, std::size_t horizon);
    [[nodiscard]] std::vector<double> sample(std::span<const double> window, double h_hat, std::size_t horizon,
                                             std::size_t n, std::uint64_t seed);

    /// Weights of level `level` as plain tensors (the shared triple when tied).
    [[nodiscard]] BlockWeights block_weights(std::size_t level) const;
    [[nodiscard]] std::size_t block_triples() const noexcept;

    [[nodiscard]] nlohmann::ordered_json to_json() const;
    [[nodiscard]] static Model from_json(const nlohmann::ordered_json& j);
    void save(const std::string& path) const;
    [[nodiscard]] static Model load(const std::string& path);

private:
    [[nodiscard]] std::string block_prefix(std::size_t level) const;

    ModelConfig config_;
    ParamStore params_;
};

/// Mean negative log-likelihood of a batch of scalar targets given their thetas.
[[nodiscard]] Var nll(const std::vector<Var>& thetas, std::span<const double> targets, std::size_t horizon);

/// Adam with bias correction over every entry of a ParamStore.
class Adam {
public:
    explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}
    void step(ParamStore& params);
    [[nodiscard]] std::size_t steps() const noexcept { return t_; }

private:
    double lr_, beta1_, beta2_, eps_;
    std::size_t t_ = 0;
    std::vector<double> m_, v_;
};

}  // namespace selfsim::nn
