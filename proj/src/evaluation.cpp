#include "selfsim/evaluation.hpp"

#include "selfsim/calibration.hpp"
#include "selfsim/collapse.hpp"
#include "selfsim/fgn.hpp"
#include "selfsim/garch.hpp"
#include "selfsim/significance.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace selfsim {

TrainedModel train_model(const std::string& name, const nn::ModelConfig& config,
                         const std::map<std::size_t, Dataset>& data, const TrainConfig& cfg, std::uint64_t seed) {
    TrainedModel tm{name, config, seed, {}, {}, {}};
    for (const auto& [h, ds] : data) {
        auto res = train(ds, config, cfg, seed);
        tm.fingerprints[h] = res.dataset_fingerprint;
        tm.history[h] = res.history;
        tm.by_horizon.emplace(h, std::move(res.model));
    }
    return tm;
}

const ModelRow& EvalReport::row(const std::string& model) const {
    for (const auto& r : models) {
        if (r.model == model) return r;
    }
    throw std::out_of_range("no model row named '" + model + "'");
}

namespace {

double sd(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    return std::sqrt(variance(v));
}

struct CellScores {
    std::vector<double> losses;
    std::vector<double> pit;
    std::vector<double> samples;  ///< one predictive draw per test window
};

NllCell summarise(const std::string& model, const TickerData& td, std::size_t horizon, std::uint64_t seed,
                  const CellScores& s, const EvalOptions& opts) {
    NllCell c;
    c.model = model;
    c.ticker = td.ticker;
    c.horizon = horizon;
    c.seed = seed;
    c.n_test = s.losses.size();
    c.nll = mean(s.losses);
    if (s.losses.size() >= 2 * opts.block_len) {
        const auto ci = block_bootstrap_ci(s.losses, opts.block_len, opts.resamples, 0.95, opts.seed);
        c.ci_lo = ci.lo;
        c.ci_hi = ci.hi;
    } else {
        c.ci_lo = c.ci_hi = c.nll;
    }
    c.ks = s.pit.size() >= 20 ? ks_distance(s.pit) : std::nan("");
    // standardised units: the IID horizon-T scale is sqrt(T)
    c.tail_energy = tail_energy_distance(s.samples, td.windows.test.targets, std::sqrt(static_cast<double>(horizon)));
    return c;
}

CellScores score_network(nn::Model& model, const TickerData& td, std::size_t horizon, std::uint64_t seed) {
    CellScores s;
    const auto& set = td.windows.test;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto flow = model.predictive(td.window(set, i), td.h_test[i], horizon);
        s.losses.push_back(-flow.log_prob(set.targets[i]));
        s.pit.push_back(flow.cdf(set.targets[i]));
        s.samples.push_back(flow.forward(normal(rng)));
    }
    return s;
}

CellScores score_iid(const TickerData& td, std::size_t horizon, std::uint64_t seed) {
    const auto fit = iid_gaussian_fit(std::span<const double>(td.x).first(td.train_end()));
    CellScores s;
    for (double r : td.windows.test.targets) {
        s.losses.push_back(-fit.log_prob(r, horizon));
        s.pit.push_back(fit.cdf(r, horizon));
    }
    s.samples = fit.sample(horizon, td.windows.test.size(), seed);
    return s;
}

CellScores score_garch(const TickerData& td, std::size_t horizon, std::uint64_t seed) {
    const auto params = garch_fit(std::span<const double>(td.x).first(td.train_end()));
    const auto& set = td.windows.test;
    std::vector<std::size_t> origins;
    for (std::size_t i = 0; i < set.size(); ++i) origins.push_back(set.first_target_index(i));
    const auto fc = garch_forecast(params, td.x, origins, horizon);
    CellScores s;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = 0; i < set.size(); ++i) {
        const double sdv = std::sqrt(fc.variance[i]);
        s.losses.push_back(gaussian_nll(set.targets[i], fc.mean[i], fc.variance[i]));
        s.pit.push_back(0.5 * std::erfc(-(set.targets[i] - fc.mean[i]) / (sdv * std::sqrt(2.0))));
        s.samples.push_back(fc.mean[i] + sdv * normal(rng));
    }
    return s;
}

// Sum of `horizon` one-step draws rolled forward from the first test window.
HorizonSampler rollout_sampler(nn::Model& model, const TickerData& td) {
    const auto& set = td.windows.test;
    std::vector<double> seed_window(td.window(set, 0).begin(), td.window(set, 0).end());
    const double h = td.h_test.front();
    return [&model, seed_window, h](std::size_t horizon, std::size_t n, std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::vector<double> out(n);
        const std::size_t w = seed_window.size();
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> history = seed_window;
            double acc = 0.0;
            for (std::size_t s = 0; s < horizon; ++s) {
                const auto flow = model.predictive(std::span<const double>(history).last(w), h, 1);
                const double r = flow.forward(normal(rng));
                acc += r;
                history.push_back(r);
            }
            out[i] = acc;
        }
        return out;
    };
}

// (H*, C*) of the ticker's own rolling aggregates; nullopt when the band is not covered.
std::optional<std::pair<double, double>> empirical_collapse(const TickerData& td,
                                                            const std::vector<std::size_t>& horizons) {
    try {
        std::map<std::size_t, std::vector<double>> samples;
        const TimeSeries ts(td.ticker, td.x);
        for (auto h : horizons) samples[h] = aggregate(ts, h).values;
        const auto res = optimal_collapse(horizon_curves(samples));
        return std::make_pair(res.h_star, res.c_star);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

}  // namespace

EvalReport evaluate(std::vector<TrainedModel>& models, const std::map<std::size_t, Dataset>& data,
                    const EvalOptions& opts) {
    if (models.empty() && !opts.baselines) throw std::invalid_argument("empty model set");
    if (data.empty()) throw std::invalid_argument("no evaluation datasets");
    EvalReport rep;
    rep.table = opts.table;
    rep.reference = opts.reference;
    for (const auto& [h, ds] : data) rep.horizons.push_back(h);

    const auto& any = data.begin()->second;
    for (const auto& [h, ds] : data) {
        if (ds.tickers.size() != any.tickers.size()) throw std::invalid_argument("datasets disagree on tickers");
        for (std::size_t i = 0; i < ds.tickers.size(); ++i) {
            if (ds.tickers[i].ticker != any.tickers[i].ticker) throw std::invalid_argument("datasets disagree on tickers");
        }
    }
    for (const auto& m : models) {
        for (const auto& [h, ds] : data) {
            auto it = m.fingerprints.find(h);
            if (m.by_horizon.count(h) == 0 || it == m.fingerprints.end()) {
                throw std::invalid_argument("model '" + m.name + "' has no network for horizon " + std::to_string(h));
            }
            if (it->second != ds.fingerprint()) {
                throw std::invalid_argument("model '" + m.name + "' was trained on different test pairs at horizon " +
                                            std::to_string(h));
            }
        }
    }

    // model name -> horizon -> ticker -> per-seed NLLs
    std::map<std::string, std::map<std::size_t, std::vector<std::vector<double>>>> nlls;
    std::vector<std::string> order;
    std::map<std::string, std::size_t> conv_params;
    auto note = [&](const std::string& name, std::size_t params) {
        if (std::find(order.begin(), order.end(), name) == order.end()) {
            order.push_back(name);
            conv_params[name] = params;
        }
    };
    const std::size_t n_tickers = any.tickers.size();

    if (opts.baselines) {
        note(kIidName, 0);
        note(kGarchName, 0);
        for (const auto& [h, ds] : data) {
            auto& iid = nlls[kIidName][h];
            auto& garch = nlls[kGarchName][h];
            iid.resize(n_tickers);
            garch.resize(n_tickers);
            for (std::size_t t = 0; t < n_tickers; ++t) {
                const auto& td = ds.tickers[t];
                const auto c1 = summarise(kIidName, td, h, 0, score_iid(td, h, opts.seed + t), opts);
                const auto c2 = summarise(kGarchName, td, h, 0, score_garch(td, h, opts.seed + t), opts);
                iid[t].push_back(c1.nll);
                garch[t].push_back(c2.nll);
                rep.cells.push_back(c1);
                rep.cells.push_back(c2);
            }
        }
    }
    for (auto& m : models) {
        note(m.name, nn::conv_param_count(m.config));
        for (const auto& [h, ds] : data) {
            auto& cell = nlls[m.name][h];
            cell.resize(n_tickers);
            auto& net = m.by_horizon.at(h);
            for (std::size_t t = 0; t < n_tickers; ++t) {
                const auto& td = ds.tickers[t];
                const auto c = summarise(m.name, td, h, m.seed, score_network(net, td, h, opts.seed + t), opts);
                cell[t].push_back(c.nll);
                rep.cells.push_back(c);
            }
        }
    }

    // rows: ticker-mean per seed, cross-ticker and cross-seed spreads
    std::map<std::string, std::map<std::size_t, std::vector<double>>> per_ticker;  // seed-averaged
    for (const auto& name : order) {
        ModelRow row;
        row.model = name;
        row.conv_params = conv_params[name];
        for (const auto& [h, by_ticker] : nlls[name]) {
            std::vector<double> ticker_means;
            std::size_t n_seeds = by_ticker.front().size();
            std::vector<double> seed_means(n_seeds, 0.0);
            for (const auto& v : by_ticker) {
                ticker_means.push_back(mean(v));
                for (std::size_t s = 0; s < n_seeds && s < v.size(); ++s) seed_means[s] += v[s];
            }
            for (auto& s : seed_means) s /= static_cast<double>(by_ticker.size());
            HorizonSummary hs;
            hs.mean_nll = mean(ticker_means);
            hs.cross_ticker_sd = sd(ticker_means);
            hs.cross_seed_sd = sd(seed_means);
            hs.error_bar = std::max(hs.cross_ticker_sd, hs.cross_seed_sd);
            row.horizons[h] = hs;
            per_ticker[name][h] = ticker_means;
        }
        rep.models.push_back(row);
    }
    const bool has_reference = per_ticker.count(opts.reference) != 0;
    if (has_reference) {
        for (auto& row : rep.models) {
            for (auto& [h, hs] : row.horizons) hs.delta = hs.mean_nll - rep.row(opts.reference).horizons.at(h).mean_nll;
        }
        for (std::size_t h : rep.horizons) {
            std::vector<PairedTest> tests;
            for (const auto& name : order) {
                if (name == opts.reference) continue;
                PairedTest pt;
                pt.reference = opts.reference;
                pt.other = name;
                pt.horizon = h;
                const auto& a = per_ticker[opts.reference][h];
                const auto& b = per_ticker[name][h];
                std::vector<double> deltas(a.size());
                std::size_t nonzero = 0;
                for (std::size_t i = 0; i < a.size(); ++i) {
                    deltas[i] = b[i] - a[i];
                    if (deltas[i] != 0.0) ++nonzero;
                }
                pt.mean_delta = mean(deltas);
                pt.n = nonzero;
                if (nonzero == 0) {
                    pt.method = "identical";
                    pt.p_value = 1.0;
                } else if (nonzero < 5) {
                    pt.method = "insufficient";
                    pt.p_value = 1.0;
                } else {
                    const auto tr = wilcoxon_signed_rank(deltas);
                    pt.statistic = tr.statistic;
                    pt.p_value = tr.p_value;
                    pt.method = tr.method;
                }
                tests.push_back(pt);
            }
            std::vector<double> ps;
            for (const auto& t : tests) ps.push_back(t.p_value);
            const auto holm = holm_bonferroni(ps, 0.05);
            for (std::size_t i = 0; i < tests.size(); ++i) {
                tests[i].holm_adjusted = holm.adjusted[i];
                tests[i].reject = holm.reject[i];
                rep.tests.push_back(tests[i]);
            }
        }
    }

    // collapse: empirical per ticker, model-side for the first few tickers (first seed of each model)
    if (opts.collapse_samples > 0 && data.count(1) != 0) {
        const auto& ds = data.at(1);
        const std::size_t limit = opts.collapse_tickers == 0 ? n_tickers : std::min(n_tickers, opts.collapse_tickers);
        for (std::size_t t = 0; t < limit; ++t) {
            const auto& td = ds.tickers[t];
            const auto e = empirical_collapse(td, opts.collapse_horizons);
            const std::optional<double> emp = e ? std::optional<double>(e->second) : std::nullopt;
            rep.collapse.push_back({"empirical", td.ticker, e ? std::optional<double>(e->first) : std::nullopt, emp, emp});
            for (auto& m : models) {
                auto& net = m.by_horizon.at(1);
                CollapseRow row{m.name, td.ticker, std::nullopt, std::nullopt, emp};
                try {
                    const auto mc = model_collapse(rollout_sampler(net, td), opts.collapse_horizons,
                                                   opts.collapse_samples, opts.seed + t, emp);
                    row.h_star = mc.model.h_star;
                    row.c_star = mc.model.c_star;
                } catch (const std::exception&) {
                    // left undefined when coverage of the eta band is insufficient
                }
                rep.collapse.push_back(row);
            }
        }
    }
    return rep;
}

// ---------------------------------------------------------------- JSON

namespace {

nlohmann::ordered_json opt_json(const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

std::optional<double> opt_from(const nlohmann::ordered_json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

// NaN has no JSON spelling; it is written as null and read back as NaN.
nlohmann::ordered_json num_json(double v) {
    return std::isnan(v) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(v);
}

double num_from(const nlohmann::ordered_json& j) { return j.is_null() ? std::nan("") : j.get<double>(); }

}  // namespace

void to_json(nlohmann::ordered_json& j, const EvalReport& r) {
    j = nlohmann::ordered_json::object();
    j["table"] = r.table;
    j["reference"] = r.reference;
    j["horizons"] = r.horizons;
    auto& models = j["models"] = nlohmann::ordered_json::array();
    for (const auto& m : r.models) {
        nlohmann::ordered_json row{{"model", m.model}, {"conv_params", m.conv_params}};
        auto& hs = row["horizons"] = nlohmann::ordered_json::array();
        for (const auto& [h, s] : m.horizons) {
            hs.push_back({{"horizon", h},
                          {"mean_nll", s.mean_nll},
                          {"cross_ticker_sd", s.cross_ticker_sd},
                          {"cross_seed_sd", s.cross_seed_sd},
                          {"error_bar", s.error_bar},
                          {"delta", s.delta}});
        }
        models.push_back(row);
    }
    auto& cells = j["cells"] = nlohmann::ordered_json::array();
    for (const auto& c : r.cells) {
        cells.push_back({{"model", c.model},
                         {"ticker", c.ticker},
                         {"horizon", c.horizon},
                         {"seed", c.seed},
                         {"nll", c.nll},
                         {"ci_lo", c.ci_lo},
                         {"ci_hi", c.ci_hi},
                         {"ks", num_json(c.ks)},
                         {"tail_energy", opt_json(c.tail_energy)},
                         {"n_test", c.n_test}});
    }
    auto& tests = j["tests"] = nlohmann::ordered_json::array();
    for (const auto& t : r.tests) {
        tests.push_back({{"reference", t.reference},
                         {"other", t.other},
                         {"horizon", t.horizon},
                         {"mean_delta", t.mean_delta},
                         {"statistic", t.statistic},
                         {"p_value", t.p_value},
                         {"n", t.n},
                         {"method", t.method},
                         {"holm_adjusted", t.holm_adjusted},
                         {"reject", t.reject}});
    }
    auto& collapse = j["collapse"] = nlohmann::ordered_json::array();
    for (const auto& c : r.collapse) {
        collapse.push_back({{"model", c.model},
                            {"ticker", c.ticker},
                            {"h_star", opt_json(c.h_star)},
                            {"c_star", opt_json(c.c_star)},
                            {"c_star_empirical", opt_json(c.c_star_empirical)}});
    }
}

void from_json(const nlohmann::ordered_json& j, EvalReport& r) {
    r = EvalReport{};
    r.table = j.at("table").get<std::string>();
    r.reference = j.at("reference").get<std::string>();
    r.horizons = j.at("horizons").get<std::vector<std::size_t>>();
    for (const auto& m : j.at("models")) {
        ModelRow row;
        row.model = m.at("model").get<std::string>();
        row.conv_params = m.at("conv_params").get<std::size_t>();
        for (const auto& h : m.at("horizons")) {
            HorizonSummary s;
            s.mean_nll = h.at("mean_nll").get<double>();
            s.cross_ticker_sd = h.at("cross_ticker_sd").get<double>();
            s.cross_seed_sd = h.at("cross_seed_sd").get<double>();
            s.error_bar = h.at("error_bar").get<double>();
            s.delta = h.at("delta").get<double>();
            row.horizons[h.at("horizon").get<std::size_t>()] = s;
        }
        r.models.push_back(row);
    }
    for (const auto& c : j.at("cells")) {
        NllCell cell;
        cell.model = c.at("model").get<std::string>();
        cell.ticker = c.at("ticker").get<std::string>();
        cell.horizon = c.at("horizon").get<std::size_t>();
        cell.seed = c.at("seed").get<std::uint64_t>();
        cell.nll = c.at("nll").get<double>();
        cell.ci_lo = c.at("ci_lo").get<double>();
        cell.ci_hi = c.at("ci_hi").get<double>();
        cell.ks = num_from(c.at("ks"));
        cell.tail_energy = opt_from(c.at("tail_energy"));
        cell.n_test = c.at("n_test").get<std::size_t>();
        r.cells.push_back(cell);
    }
    for (const auto& t : j.at("tests")) {
        PairedTest pt;
        pt.reference = t.at("reference").get<std::string>();
        pt.other = t.at("other").get<std::string>();
        pt.horizon = t.at("horizon").get<std::size_t>();
        pt.mean_delta = t.at("mean_delta").get<double>();
        pt.statistic = t.at("statistic").get<double>();
        pt.p_value = t.at("p_value").get<double>();
        pt.n = t.at("n").get<std::size_t>();
        pt.method = t.at("method").get<std::string>();
        pt.holm_adjusted = t.at("holm_adjusted").get<double>();
        pt.reject = t.at("reject").get<bool>();
        r.tests.push_back(pt);
    }
    for (const auto& c : j.at("collapse")) {
        r.collapse.push_back({c.at("model").get<std::string>(), c.at("ticker").get<std::string>(),
                              opt_from(c.at("h_star")), opt_from(c.at("c_star")),
                              opt_from(c.at("c_star_empirical"))});
    }
}

}  // namespace selfsim
