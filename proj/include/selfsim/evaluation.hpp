#pragma once

#include "selfsim/trainer.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace selfsim {

/// A variant trained at one seed, one network per evaluation horizon.
struct TrainedModel {
    std::string name;
    nn::ModelConfig config;
    std::uint64_t seed = 0;
    std::map<std::size_t, nn::Model> by_horizon;
    std::map<std::size_t, std::string> fingerprints;
    std::map<std::size_t, std::vector<EpochStats>> history;
};

/// Trains `config` separately on each dataset (one per horizon).
[[nodiscard]] TrainedModel train_model(const std::string& name, const nn::ModelConfig& config,
                                       const std::map<std::size_t, Dataset>& data, const TrainConfig& cfg,
                                       std::uint64_t seed);

inline constexpr const char* kIidName = "iid_gaussian";
inline constexpr const char* kGarchName = "garch_1_1";

struct EvalOptions {
    std::string table = "comparison";  ///< "comparison" or "ablation"
    std::string reference = "se_wavenet_full";
    bool baselines = true;             ///< add IID and GARCH rows
    std::size_t block_len = 21;
    std::size_t resamples = 1000;
    std::size_t collapse_samples = 1000;  ///< per horizon; 0 skips the model-side collapse
    std::size_t collapse_tickers = 3;     ///< first tickers that get a model-side collapse; 0 = all
    std::vector<std::size_t> collapse_horizons{1, 5, 21, 63};
    std::uint64_t seed = 0;
};

struct NllCell {
    std::string model;
    std::string ticker;
    std::size_t horizon = 1;
    std::uint64_t seed = 0;
    double nll = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    double ks = 0.0;
    std::optional<double> tail_energy;
    std::size_t n_test = 0;

    friend bool operator==(const NllCell&, const NllCell&) = default;
};

struct HorizonSummary {
    double mean_nll = 0.0;
    double cross_ticker_sd = 0.0;
    double cross_seed_sd = 0.0;
    double error_bar = 0.0;  ///< larger of the two spreads above
    double delta = 0.0;      ///< mean NLL minus the reference model's

    friend bool operator==(const HorizonSummary&, const HorizonSummary&) = default;
};

struct ModelRow {
    std::string model;
    std::size_t conv_params = 0;
    std::map<std::size_t, HorizonSummary> horizons;

    friend bool operator==(const ModelRow&, const ModelRow&) = default;
};

struct PairedTest {
    std::string reference;
    std::string other;
    std::size_t horizon = 1;
    double mean_delta = 0.0;  ///< other minus reference, averaged over tickers
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
    std::string method;
    double holm_adjusted = 1.0;
    bool reject = false;

    friend bool operator==(const PairedTest&, const PairedTest&) = default;
};

struct CollapseRow {
    std::string model;
    std::string ticker;
    std::optional<double> h_star;
    std::optional<double> c_star;
    std::optional<double> c_star_empirical;

    friend bool operator==(const CollapseRow&, const CollapseRow&) = default;
};

struct EvalReport {
    std::string table;
    std::string reference;
    std::vector<std::size_t> horizons;
    std::vector<ModelRow> models;
    std::vector<NllCell> cells;
    std::vector<PairedTest> tests;
    std::vector<CollapseRow> collapse;

    [[nodiscard]] const ModelRow& row(const std::string& model) const;
    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Scores every model (and optionally the IID / GARCH baselines) on the shared test
/// windows. Throws std::invalid_argument when a model was trained on different test
/// pairs, when a horizon is missing, or when the model set is empty.
[[nodiscard]] EvalReport evaluate(std::vector<TrainedModel>& models, const std::map<std::size_t, Dataset>& data,
                                  const EvalOptions& opts);

void to_json(nlohmann::ordered_json& j, const EvalReport& r);
void from_json(const nlohmann::ordered_json& j, EvalReport& r);

}  // namespace selfsim
