#include "selfsim/trainer.hpp"

#include "selfsim/estimators.hpp"
#include "selfsim/fgn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace selfsim {

const char* to_string(HurstMode m) { return m == HurstMode::per_series ? "per_series" : "rolling"; }

HurstMode parse_hurst_mode(const std::string& name) {
    if (name == "per_series") return HurstMode::per_series;
    if (name == "rolling") return HurstMode::rolling;
    throw std::invalid_argument("unknown Hurst mode '" + name + "'");
}

void TrainConfig::validate() const {
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (horizons.empty() || eval_horizons.empty()) throw std::invalid_argument("horizons must be non-empty");
    for (auto h : horizons) {
        if (h == 0) throw std::invalid_argument("horizons must be >= 1");
    }
    for (auto h : eval_horizons) {
        if (h == 0) throw std::invalid_argument("horizons must be >= 1");
    }
    if (seeds.empty()) throw std::invalid_argument("at least one seed is required");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
        throw std::invalid_argument("validation_fraction must be in [0, 1)");
    }
    if (window < 8) throw std::invalid_argument("window must be >= 8");
    if (spectral_trajectories < 8 || spectral_length < 64) {
        throw std::invalid_argument("spectral rollouts need >= 8 trajectories of length >= 64");
    }
}

void to_json(nlohmann::ordered_json& j, const TrainConfig& c) {
    j = nlohmann::ordered_json{{"epochs", c.epochs},
                               {"batch_size", c.batch_size},
                               {"learning_rate", c.learning_rate},
                               {"seeds", c.seeds},
                               {"horizons", c.horizons},
                               {"eval_horizons", c.eval_horizons},
                               {"test_split", c.test_split},
                               {"window", c.window},
                               {"hurst_mode", to_string(c.hurst_mode)},
                               {"hurst_window", c.hurst_window},
                               {"validation_fraction", c.validation_fraction},
                               {"spectral_every", c.spectral_every},
                               {"spectral_trajectories", c.spectral_trajectories},
                               {"spectral_length", c.spectral_length}};
}

void from_json(const nlohmann::ordered_json& j, TrainConfig& c) {
    TrainConfig d;
    c.epochs = j.value("epochs", d.epochs);
    c.batch_size = j.value("batch_size", d.batch_size);
    c.learning_rate = j.value("learning_rate", d.learning_rate);
    c.seeds = j.value("seeds", d.seeds);
    c.horizons = j.value("horizons", d.horizons);
    c.eval_horizons = j.value("eval_horizons", d.eval_horizons);
    c.test_split = j.value("test_split", d.test_split);
    c.window = j.value("window", d.window);
    c.hurst_mode = parse_hurst_mode(j.value("hurst_mode", std::string(to_string(d.hurst_mode))));
    c.hurst_window = j.value("hurst_window", d.hurst_window);
    c.validation_fraction = j.value("validation_fraction", d.validation_fraction);
    c.spectral_every = j.value("spectral_every", d.spectral_every);
    c.spectral_trajectories = j.value("spectral_trajectories", d.spectral_trajectories);
    c.spectral_length = j.value("spectral_length", d.spectral_length);
    c.validate();
}

// ---------------------------------------------------------------- data

namespace {

double rolling_hurst(const std::vector<double>& x, std::size_t end, std::size_t w, double fallback) {
    const std::size_t begin = end > w ? end - w : 0;
    if (end - begin < 64) return fallback;
    RsOptions opts;
    opts.min_window = 8;
    try {
        return rs_hurst(std::span<const double>(x).subspan(begin, end - begin), opts).value;
    } catch (const std::exception&) {
        return fallback;
    }
}

}  // namespace

std::string Dataset::fingerprint() const {
    std::ostringstream os;
    os << "T" << horizon << "W" << window;
    for (const auto& t : tickers) {
        os << '|' << t.ticker << ':' << t.x.size() << ':' << t.windows.test.size();
        if (!t.windows.test.starts.empty()) os << '@' << t.windows.test.starts.front();
    }
    return os.str();
}

Dataset build_dataset(const Panel& panel, std::size_t horizon, const TrainConfig& cfg) {
    if (panel.empty()) throw std::invalid_argument("empty panel");
    Dataset data;
    data.horizon = horizon;
    data.window = cfg.window;
    for (const auto& [name, ps] : panel) {
        const auto& series = ps.series;
        const std::size_t minimum = cfg.window + horizon + cfg.test_split;
        if (series.size() < minimum) {
            throw std::invalid_argument("ticker '" + name + "' has " + std::to_string(series.size()) +
                                        " samples, needs at least " + std::to_string(minimum));
        }
        const std::size_t pre = series.size() - cfg.test_split;
        const auto st = standardize(series, IndexRange{0, pre});
        TickerData td;
        td.ticker = name;
        td.x.assign(st.series.values().begin(), st.series.values().end());
        td.mean = st.mean;
        td.std = st.std;
        td.h_series = rs_hurst(std::span<const double>(td.x).first(pre)).value;
        td.windows = make_windows(st.series, cfg.window, horizon, cfg.test_split);
        auto fill = [&](const WindowSet& set, std::vector<double>& out) {
            out.resize(set.size());
            for (std::size_t i = 0; i < set.size(); ++i) {
                out[i] = cfg.hurst_mode == HurstMode::per_series
                             ? td.h_series
                             : rolling_hurst(td.x, set.starts[i] + set.window, cfg.hurst_window, td.h_series);
            }
        };
        fill(td.windows.train, td.h_train);
        fill(td.windows.test, td.h_test);
        td.n_validation = static_cast<std::size_t>(
            std::floor(cfg.validation_fraction * static_cast<double>(td.windows.train.size())));
        data.tickers.push_back(std::move(td));
    }
    return data;
}

Panel synthetic_universe(std::size_t count, std::size_t length, double h_lo, double h_hi, std::uint64_t seed) {
    if (count == 0) throw std::invalid_argument("synthetic universe needs at least one ticker");
    if (!(h_lo <= h_hi)) throw std::invalid_argument("H range is empty");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> draw(h_lo, h_hi);
    Panel panel;
    for (std::size_t i = 0; i < count; ++i) {
        const double h = h_lo == h_hi ? h_lo : draw(rng);
        char name[32];
        std::snprintf(name, sizeof name, "SYN%02zu", i);
        auto values = synth_fgn(HurstExponent(h), length, seed * 1000003ULL + i + 1);
        std::vector<double> v(values.values().begin(), values.values().end());
        std::vector<std::string> dates(length);
        for (std::size_t t = 0; t < length; ++t) {
            char d[32];
            std::snprintf(d, sizeof d, "%06zu", t);
            dates[t] = d;
        }
        panel.emplace(name, PanelSeries{TimeSeries(name, std::move(v)), std::move(dates)});
    }
    return panel;
}

// ---------------------------------------------------------------- training

namespace {

std::string parameter_norms(const nn::ParamStore& p) {
    std::ostringstream os;
    const auto values = p.values();
    for (const auto& e : p.entries()) {
        double s = 0.0;
        for (std::size_t i = 0; i < e.size(); ++i) s += values[e.offset + i] * values[e.offset + i];
        os << "\n  " << e.name << " |w| = " << std::sqrt(s);
    }
    return os.str();
}

// Autoregressive rollouts of one-step samples; the window feedback is not differentiated.
nn::Var welch_term(nn::Model& model, nn::Tape& tape, const nn::BoundModel& bound,
                   std::span<const std::span<const double>> windows, std::span<const double> h_hats,
                   const TrainConfig& cfg, std::mt19937_64& rng, double& value) {
    const auto& mc = model.config();
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t n_traj = cfg.spectral_trajectories;
    std::vector<std::vector<double>> trajectories(n_traj);
    std::vector<std::vector<nn::Var>> pushed(n_traj);
    double h_mean = 0.0;
    for (std::size_t b = 0; b < n_traj; ++b) {
        const std::size_t src = b % windows.size();
        h_mean += h_hats[src];
        std::vector<double> history(windows[src].begin(), windows[src].end());
        const std::size_t w = history.size();
        for (std::size_t s = 0; s < cfg.spectral_length; ++s) {
            const auto ctx = model.context(tape, bound, std::span<const double>(history).last(w), h_hats[src]);
            const auto theta = model.theta(tape, bound, ctx, h_hats[src]);
            const auto r = nn::flow_push(theta, normal(rng), 1);
            pushed[b].push_back(r);
            trajectories[b].push_back(r.item());
            history.push_back(r.item());
        }
    }
    h_mean /= static_cast<double>(n_traj);
    SpectralOptions so;
    so.lambda_shape = mc.lambda_shape;
    const auto loss = spectral_loss_welch(trajectories, std::clamp(h_mean, 0.01, 0.99), so);
    value = loss.value;
    // linear surrogate whose gradient equals dLoss/dsample
    std::vector<nn::Var> terms;
    for (std::size_t b = 0; b < n_traj; ++b) {
        for (std::size_t s = 0; s < pushed[b].size(); ++s) terms.push_back(nn::scale(pushed[b][s], loss.grad[b][s]));
    }
    const double n_terms = static_cast<double>(terms.size());
    return nn::scale(nn::mean_of(terms), n_terms);
}

}  // namespace

StepResult train_step(nn::Model& model, nn::Adam& opt, std::span<const std::span<const double>> windows,
                      std::span<const double> targets, std::span<const double> h_hats, std::size_t horizon,
                      const TrainConfig& cfg, std::mt19937_64& rng) {
    if (windows.empty() || windows.size() != targets.size() || windows.size() != h_hats.size()) {
        throw std::invalid_argument("train_step needs matching non-empty windows, targets and H estimates");
    }
    const auto& mc = model.config();
    nn::Tape tape;
    const auto bound = model.bind(tape);
    std::vector<nn::Var> thetas;
    thetas.reserve(windows.size());
    for (std::size_t i = 0; i < windows.size(); ++i) {
        thetas.push_back(model.theta(tape, bound, model.context(tape, bound, windows[i], h_hats[i]), h_hats[i]));
    }
    nn::Var nll = nn::nll(thetas, targets, horizon);
    StepResult res;
    res.nll = nll.item();
    nn::Var total = nll;
    if (mc.spec_loss == SpectralMode::variance_surrogate && targets.size() >= 1) {
        // targets are put on the unit-variance scale of a one-step return first
        std::vector<double> unit(targets.begin(), targets.end());
        const double inv = 1.0 / std::sqrt(static_cast<double>(horizon));
        for (auto& v : unit) v *= inv;
        res.spectral = spectral_loss_surrogate(unit).value;
    } else if (mc.spec_loss == SpectralMode::welch && horizon == 1 && mc.head == nn::HeadKind::flow &&
               cfg.spectral_every > 0 && opt.steps() % cfg.spectral_every == 0) {
        double value = 0.0;
        const auto term = welch_term(model, tape, bound, windows, h_hats, cfg, rng, value);
        res.spectral = value;
        total = nn::add(total, nn::scale(term, mc.lambda_spec));
    }
    res.loss = res.nll + mc.lambda_spec * res.spectral;
    if (!std::isfinite(res.loss)) {
        throw std::runtime_error("non-finite training loss (nll " + std::to_string(res.nll) + ", spectral " +
                                 std::to_string(res.spectral) + "); parameter norms:" +
                                 parameter_norms(model.params()));
    }
    model.params().zero_grad();
    tape.backward(total);
    opt.step(model.params());
    model.params().zero_grad();
    return res;
}

namespace {

struct SampleRef {
    std::size_t ticker;
    std::size_t index;
};

}  // namespace

double mean_nll(nn::Model& model, const Dataset& data, bool test) {
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& td : data.tickers) {
        const auto& set = test ? td.windows.test : td.windows.train;
        const auto& hs = test ? td.h_test : td.h_train;
        const std::size_t first = test ? 0 : set.size() - td.n_validation;
        for (std::size_t i = first; i < set.size(); ++i) {
            s -= model.log_prob(td.window(set, i), hs[i], set.targets[i], data.horizon);
            ++n;
        }
    }
    if (n == 0) return std::nan("");
    return s / static_cast<double>(n);
}

TrainResult train(const Dataset& data, const nn::ModelConfig& config, const TrainConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    TrainResult res{nn::Model(config, seed), {}, 0, 0.0, data.fingerprint()};
    nn::Adam opt(cfg.learning_rate);
    std::mt19937_64 rng(seed ^ 0x5eed5eedULL);

    std::vector<SampleRef> refs;
    for (std::size_t t = 0; t < data.tickers.size(); ++t) {
        const auto& td = data.tickers[t];
        for (std::size_t i = 0; i + td.n_validation < td.windows.train.size(); ++i) refs.push_back({t, i});
    }
    if (refs.empty()) throw std::invalid_argument("no training windows");

    std::vector<std::span<const double>> windows;
    std::vector<double> targets;
    std::vector<double> hs;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(refs.begin(), refs.end(), rng);
        double nll_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t b = 0; b < refs.size(); b += cfg.batch_size) {
            const std::size_t e = std::min(refs.size(), b + cfg.batch_size);
            windows.clear();
            targets.clear();
            hs.clear();
            for (std::size_t k = b; k < e; ++k) {
                const auto& td = data.tickers[refs[k].ticker];
                windows.push_back(td.window(td.windows.train, refs[k].index));
                targets.push_back(td.windows.train.targets[refs[k].index]);
                hs.push_back(td.h_train[refs[k].index]);
            }
            const auto step = train_step(res.model, opt, windows, targets, hs, data.horizon, cfg, rng);
            nll_sum += step.nll;
            ++batches;
        }
        res.history.push_back({epoch + 1, nll_sum / static_cast<double>(batches), mean_nll(res.model, data, false)});
    }
    res.steps = opt.steps();
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

// ---------------------------------------------------------------- variants

const char* to_string(Variant v) {
    switch (v) {
        case Variant::wavenet_gaussian: return "wavenet_gaussian";
        case Variant::wavenet_flow_film: return "wavenet_flow_film";
        case Variant::se_wavenet_full: return "se_wavenet_full";
        case Variant::no_tying: return "no_tying";
        case Variant::no_wavelet: return "no_wavelet";
        case Variant::no_film: return "no_film";
        case Variant::no_spectral: return "no_spectral";
    }
    return "?";
}

Variant parse_variant(const std::string& name) {
    for (auto v : {Variant::wavenet_gaussian, Variant::wavenet_flow_film, Variant::se_wavenet_full, Variant::no_tying,
                   Variant::no_wavelet, Variant::no_film, Variant::no_spectral}) {
        if (name == to_string(v)) return v;
    }
    throw std::invalid_argument("unknown model variant '" + name + "'");
}

nn::ModelConfig variant_config(Variant v, const nn::ModelConfig& full) {
    nn::ModelConfig c = full;
    switch (v) {
        case Variant::se_wavenet_full: break;
        case Variant::wavenet_gaussian:
            c.weight_tied = false;
            c.use_dwt = false;
            c.use_film = false;
            c.head = nn::HeadKind::gaussian;
            c.spec_loss = SpectralMode::off;
            break;
        case Variant::wavenet_flow_film:
            c.weight_tied = false;
            c.use_dwt = false;
            c.use_film = true;
            c.head = nn::HeadKind::flow;
            c.spec_loss = SpectralMode::off;
            break;
        case Variant::no_tying: c.weight_tied = false; break;
        case Variant::no_wavelet: c.use_dwt = false; break;
        case Variant::no_film: c.use_film = false; break;
        case Variant::no_spectral: c.spec_loss = SpectralMode::off; break;
    }
    return c;
}

std::vector<Variant> comparison_variants() {
    return {Variant::wavenet_gaussian, Variant::wavenet_flow_film, Variant::se_wavenet_full};
}

std::vector<Variant> ablation_variants() {
    return {Variant::se_wavenet_full, Variant::no_tying, Variant::no_wavelet, Variant::no_film, Variant::no_spectral};
}

}  // namespace selfsim
