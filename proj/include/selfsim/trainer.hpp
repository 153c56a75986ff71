#pragma once

#include "selfsim/model.hpp"
#include "selfsim/series.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace selfsim {

enum class HurstMode { per_series, rolling };

[[nodiscard]] const char* to_string(HurstMode m);
[[nodiscard]] HurstMode parse_hurst_mode(const std::string& name);

struct TrainConfig {
    std::size_t epochs = 5;
    std::size_t batch_size = 64;
    double learning_rate = 1e-3;
    std::vector<std::uint64_t> seeds{0};
    std::vector<std::size_t> horizons{1, 5, 21, 63};  ///< collapse horizons
    std::vector<std::size_t> eval_horizons{1, 21};    ///< NLL table columns
    std::size_t test_split = 252;
    std::size_t window = 128;
    HurstMode hurst_mode = HurstMode::per_series;
    std::size_t hurst_window = 252;
    double validation_fraction = 0.1;
    // Welch-mode spectral term: rollouts every `spectral_every` steps.
    std::size_t spectral_every = 10;
    std::size_t spectral_trajectories = 8;
    std::size_t spectral_length = 64;

    /// Throws std::invalid_argument on epochs < 1, empty horizons, batch_size < 1 or bad fractions.
    void validate() const;
};

void to_json(nlohmann::ordered_json& j, const TrainConfig& c);
void from_json(const nlohmann::ordered_json& j, TrainConfig& c);

/// One standardised ticker with its windows at a single horizon.
struct TickerData {
    std::string ticker;
    std::vector<double> x;   ///< standardised with pre-test statistics
    double mean = 0.0;
    double std = 1.0;
    double h_series = 0.5;   ///< R/S estimate on the pre-test segment
    WindowSplit windows;
    std::vector<double> h_train;  ///< Hurst input per train window
    std::vector<double> h_test;
    std::size_t n_validation = 0;  ///< trailing train windows held out for validation

    [[nodiscard]] std::size_t train_end() const noexcept { return x.size() - windows.test.size(); }
    [[nodiscard]] std::span<const double> window(const WindowSet& set, std::size_t i) const {
        return std::span<const double>(x).subspan(set.starts[i], set.window);
    }
};

struct Dataset {
    std::size_t horizon = 1;
    std::size_t window = 128;
    std::vector<TickerData> tickers;

    /// Stable summary of tickers and test windows; equal fingerprints mean identical test pairs.
    [[nodiscard]] std::string fingerprint() const;
};

/// Standardises each ticker on its pre-test segment, estimates H and cuts windows.
[[nodiscard]] Dataset build_dataset(const Panel& panel, std::size_t horizon, const TrainConfig& cfg);

/// `count` fGn tickers (named SYN00 ..) with H drawn uniformly in [h_lo, h_hi].
[[nodiscard]] Panel synthetic_universe(std::size_t count, std::size_t length, double h_lo, double h_hi,
                                       std::uint64_t seed);

struct StepResult {
    double loss = 0.0;
    double nll = 0.0;
    double spectral = 0.0;
};

/// One optimiser update on a batch: loss = NLL + lambda_spec * L_spec.
/// The variance surrogate only adds to the reported loss. Throws std::runtime_error on a
/// non-finite loss, listing parameter norms.
StepResult train_step(nn::Model& model, nn::Adam& opt, std::span<const std::span<const double>> windows,
                      std::span<const double> targets, std::span<const double> h_hats, std::size_t horizon,
                      const TrainConfig& cfg, std::mt19937_64& rng);

struct EpochStats {
    std::size_t epoch = 0;
    double train_nll = 0.0;
    double validation_nll = 0.0;
};

struct TrainResult {
    nn::Model model;
    std::vector<EpochStats> history;
    std::size_t steps = 0;
    double seconds = 0.0;
    std::string dataset_fingerprint;
};

/// Shuffled minibatch training over the concatenated train windows of every ticker.
[[nodiscard]] TrainResult train(const Dataset& data, const nn::ModelConfig& config, const TrainConfig& cfg,
                                std::uint64_t seed);

/// Mean NLL of a model over the validation (or test) windows of a dataset.
[[nodiscard]] double mean_nll(nn::Model& model, const Dataset& data, bool test);

enum class Variant {
    wavenet_gaussian,
    wavenet_flow_film,
    se_wavenet_full,
    no_tying,
    no_wavelet,
    no_film,
    no_spectral,
};

[[nodiscard]] const char* to_string(Variant v);
[[nodiscard]] Variant parse_variant(const std::string& name);
/// Config of a comparison or ablation variant derived from the full model's config.
[[nodiscard]] nn::ModelConfig variant_config(Variant v, const nn::ModelConfig& full);
[[nodiscard]] std::vector<Variant> comparison_variants();
[[nodiscard]] std::vector<Variant> ablation_variants();

}  // namespace selfsim
