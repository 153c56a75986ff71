// selfsim: command-line front end for synthesis, estimation, diagnostics, training and evaluation.

#include "selfsim/collapse.hpp"
#include "selfsim/csv.hpp"
#include "selfsim/equivariance.hpp"
#include "selfsim/estimators.hpp"
#include "selfsim/evaluation.hpp"
#include "selfsim/fgn.hpp"
#include "selfsim/report.hpp"
#include "selfsim/spectral.hpp"
#include "selfsim/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace selfsim;

namespace {

constexpr const char* kOutDirEnv = "SELFSIM_OUT_DIR";

struct UserError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

fs::path out_path(const std::string& p) {
    fs::path path(p);
    if (path.is_absolute()) return path;
    const char* base = std::getenv(kOutDirEnv);
    return base != nullptr ? fs::path(base) / path : path;
}

void write_text(const std::string& p, const std::string& text) {
    const auto path = out_path(p);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os) throw UserError("cannot write '" + path.string() + "'");
    os << text;
}

void emit(const json& j, const std::string& out) {
    if (out.empty()) {
        std::cout << j.dump(2) << '\n';
    } else {
        write_text(out, j.dump(2) + "\n");
        std::cerr << "wrote " << out_path(out).string() << '\n';
    }
}

std::vector<std::size_t> parse_horizons(const std::string& s) {
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stoul(item));
    }
    if (out.empty()) throw UserError("empty horizon list");
    return out;
}

// Shared data-source options: a CSV panel, or the synthetic fGn universe.
struct DataOptions {
    std::string input;
    std::string format = "return";
    std::size_t tickers = 25;
    std::size_t length = 2520;
    double h_lo = 0.3;
    double h_hi = 0.8;
    std::uint64_t seed = 1;

    void attach(CLI::App* app) {
        app->add_option("--input", input, "CSV panel (wide, long or single column)");
        app->add_option("--format", format, "price or return")->check(CLI::IsMember({"price", "return"}));
        app->add_option("--synthetic-tickers", tickers, "synthetic universe size when no input is given");
        app->add_option("--synthetic-length", length, "samples per synthetic ticker");
        app->add_option("--h-lo", h_lo, "lower end of the synthetic H range");
        app->add_option("--h-hi", h_hi, "upper end of the synthetic H range");
        app->add_option("--data-seed", seed, "seed of the synthetic universe");
    }

    [[nodiscard]] Panel load() const {
        if (!input.empty()) return load_csv(input, parse_value_format(format));
        return synthetic_universe(tickers, length, h_lo, h_hi, seed);
    }

    void apply(const json& j) {
        if (!j.contains("data")) return;
        const auto& d = j["data"];
        input = d.value("input", input);
        format = d.value("format", format);
        tickers = d.value("tickers", tickers);
        length = d.value("length", length);
        h_lo = d.value("h_lo", h_lo);
        h_hi = d.value("h_hi", h_hi);
        seed = d.value("seed", seed);
    }
};

struct Experiment {
    nn::ModelConfig model;
    TrainConfig train;
};

Experiment load_experiment(const std::string& path, DataOptions& data) {
    Experiment e;
    if (path.empty()) return e;
    std::ifstream in(path);
    if (!in) throw UserError("cannot read config '" + path + "'");
    const auto j = json::parse(in);
    if (j.contains("model")) e.model = j["model"].get<nn::ModelConfig>();
    if (j.contains("train")) e.train = j["train"].get<TrainConfig>();
    data.apply(j);
    return e;
}

std::map<std::size_t, Dataset> build_all(const Panel& panel, const TrainConfig& cfg) {
    std::map<std::size_t, Dataset> out;
    for (auto h : cfg.eval_horizons) out.emplace(h, build_dataset(panel, h, cfg));
    return out;
}

std::string checkpoint_name(const std::string& variant, std::size_t horizon, std::uint64_t seed) {
    return variant + "_T" + std::to_string(horizon) + "_s" + std::to_string(seed) + ".json";
}

json save_models(const std::vector<TrainedModel>& models, const fs::path& dir) {
    fs::create_directories(dir);
    json manifest = json::array();
    for (const auto& m : models) {
        for (const auto& [h, net] : m.by_horizon) {
            const auto file = checkpoint_name(m.name, h, m.seed);
            net.save((dir / file).string());
            json hist = json::array();
            for (const auto& e : m.history.at(h)) {
                hist.push_back({{"epoch", e.epoch}, {"train_nll", e.train_nll}, {"validation_nll", e.validation_nll}});
            }
            manifest.push_back({{"name", m.name},
                                {"seed", m.seed},
                                {"horizon", h},
                                {"file", file},
                                {"fingerprint", m.fingerprints.at(h)},
                                {"history", hist}});
        }
    }
    std::ofstream os(dir / "manifest.json");
    os << manifest.dump(2) << '\n';
    return manifest;
}

std::vector<TrainedModel> load_models(const fs::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw UserError("no manifest.json in '" + dir.string() + "'");
    const auto manifest = json::parse(in);
    std::vector<TrainedModel> out;
    for (const auto& e : manifest) {
        const auto name = e.at("name").get<std::string>();
        const auto seed = e.at("seed").get<std::uint64_t>();
        const auto h = e.at("horizon").get<std::size_t>();
        auto it = std::find_if(out.begin(), out.end(), [&](const TrainedModel& m) { return m.name == name && m.seed == seed; });
        auto net = nn::Model::load((dir / e.at("file").get<std::string>()).string());
        if (it == out.end()) {
            out.push_back(TrainedModel{name, net.config(), seed, {}, {}, {}});
            it = out.end() - 1;
        }
        it->fingerprints[h] = e.at("fingerprint").get<std::string>();
        it->by_horizon.emplace(h, std::move(net));
    }
    return out;
}

std::vector<TrainedModel> train_variants(const std::vector<Variant>& variants, const Experiment& exp,
                                         const std::map<std::size_t, Dataset>& data) {
    std::vector<TrainedModel> out;
    for (auto v : variants) {
        for (auto seed : exp.train.seeds) {
            std::cerr << "training " << to_string(v) << " (seed " << seed << ")\n";
            out.push_back(train_model(to_string(v), variant_config(v, exp.model), data, exp.train, seed));
        }
    }
    return out;
}

void write_reports(const EvalReport& rep, const std::string& dir, const std::string& stem) {
    const auto paths = write_report(rep, out_path(dir), stem,
                                    {ReportFormat::json, ReportFormat::csv, ReportFormat::markdown});
    for (const auto& p : paths) std::cerr << "wrote " << p.string() << '\n';
    std::cout << render_markdown(rep);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Self-similar return modelling: synthesis, diagnostics, training and evaluation"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate fractional Gaussian noise");
    double synth_h = 0.7;
    std::size_t synth_n = 4096;
    std::uint64_t synth_seed = 0;
    std::string synth_out = "fgn.csv";
    std::string synth_method = "davies-harte";
    synth->add_option("--hurst", synth_h, "Hurst exponent in (0, 1)")->required();
    synth->add_option("--length", synth_n, "number of samples");
    synth->add_option("--seed", synth_seed, "RNG seed");
    synth->add_option("--method", synth_method, "davies-harte or hosking")
        ->check(CLI::IsMember({"davies-harte", "hosking"}));
    synth->add_option("--out", synth_out, "output CSV");

    // estimate
    auto* estimate = app.add_subcommand("estimate", "Hurst estimates and F-score ranking");
    DataOptions est_data;
    est_data.attach(estimate);
    std::size_t top_k = 25;
    std::string est_out;
    estimate->add_option("--top-k", top_k, "tickers kept by the F-score ranking");
    estimate->add_option("--out", est_out, "JSON output (stdout when omitted)");

    // collapse
    auto* collapse = app.add_subcommand("collapse", "scaling-collapse diagnostic");
    DataOptions col_data;
    col_data.attach(collapse);
    std::string col_horizons = "1,5,21,63";
    std::string col_out;
    collapse->add_option("--horizons", col_horizons, "comma-separated aggregation horizons");
    collapse->add_option("--out", col_out, "JSON output");

    // spectrum
    auto* spectrum = app.add_subcommand("spectrum", "Welch spectrum and slope");
    DataOptions spec_data;
    spec_data.attach(spectrum);
    std::size_t segment = 256;
    std::string spec_out;
    spectrum->add_option("--segment", segment, "Welch segment length");
    spectrum->add_option("--out", spec_out, "JSON output");

    // verify
    auto* verify = app.add_subcommand("verify", "numerical checks of the dyadic equivariance identities");
    bool do_prop1 = false;
    bool do_cor1 = false;
    std::size_t trials = 100;
    std::uint64_t verify_seed = 0;
    std::string verify_out;
    verify->add_flag("--prop1", do_prop1, "single dilated convolution identity");
    verify->add_flag("--corollary1", do_cor1, "weight-tied stack level shift");
    verify->add_option("--trials", trials, "random trials");
    verify->add_option("--seed", verify_seed, "RNG seed");
    verify->add_option("--out", verify_out, "JSON output");

    // train / evaluate / ablate
    auto* train_cmd = app.add_subcommand("train", "train model variants and save checkpoints");
    DataOptions train_data;
    train_data.attach(train_cmd);
    std::string train_config;
    std::vector<std::string> train_variants_s{"se_wavenet_full"};
    std::string train_out = "checkpoints";
    train_cmd->add_option("--config", train_config, "JSON config with model/train/data sections");
    train_cmd->add_option("--variant", train_variants_s, "variants to train")->expected(1, -1);
    train_cmd->add_option("--out", train_out, "checkpoint directory");

    auto* eval_cmd = app.add_subcommand("evaluate", "score checkpoints and baselines on the test windows");
    DataOptions eval_data;
    eval_data.attach(eval_cmd);
    std::string eval_config;
    std::string eval_models = "checkpoints";
    std::string eval_out = "report";
    std::size_t eval_collapse_tickers = 3;
    eval_cmd->add_option("--config", eval_config, "JSON config used for training");
    eval_cmd->add_option("--models", eval_models, "checkpoint directory written by train");
    eval_cmd->add_option("--out", eval_out, "report directory");
    eval_cmd->add_option("--collapse-tickers", eval_collapse_tickers, "tickers with a model-side collapse (0 = all)");

    auto* ablate = app.add_subcommand("ablate", "retrain the ablation variants and compare with the full model");
    DataOptions abl_data;
    abl_data.attach(ablate);
    std::string abl_config;
    std::string abl_out = "ablation";
    std::size_t abl_collapse_tickers = 0;
    ablate->add_option("--config", abl_config, "JSON config");
    ablate->add_option("--out", abl_out, "report directory");
    ablate->add_option("--collapse-tickers", abl_collapse_tickers, "tickers with a model-side collapse (0 = none)");

    // report
    auto* report = app.add_subcommand("report", "render a saved JSON report");
    std::string report_in;
    std::string report_format = "markdown";
    std::string report_out;
    report->add_option("--input", report_in, "report JSON")->required();
    report->add_option("--format", report_format, "json, csv or markdown");
    report->add_option("--out", report_out, "output file (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (synth->parsed()) {
            const HurstExponent h(synth_h);
            const auto x = synth_method == "hosking" ? synth_fgn_hosking(h, synth_n, synth_seed)
                                                     : synth_fgn(h, synth_n, synth_seed);
            const auto path = out_path(synth_out);
            if (path.has_parent_path()) fs::create_directories(path.parent_path());
            write_series_csv(path, x);
            std::cerr << "wrote " << path.string() << '\n';
        } else if (estimate->parsed()) {
            const auto panel = est_data.load();
            json j;
            json per = json::array();
            for (const auto& [name, ps] : panel) {
                json row{{"ticker", name}, {"length", ps.series.size()}};
                try {
                    row["rs_hurst"] = rs_hurst(ps.series.values()).value;
                } catch (const std::exception& e) {
                    row["rs_hurst"] = nullptr;
                    row["rs_error"] = e.what();
                }
                try {
                    row["avar_hurst"] = avar_hurst(ps.series.values()).value;
                } catch (const std::exception& e) {
                    row["avar_hurst"] = nullptr;
                    row["avar_error"] = e.what();
                }
                per.push_back(row);
            }
            j["series"] = per;
            json ranking = json::array();
            for (const auto& r : rank_universe(panel, std::min(top_k, panel.size()))) {
                ranking.push_back({{"ticker", r.ticker},
                                   {"rho", r.rho},
                                   {"h_av", r.h_av},
                                   {"excess_kurtosis", r.excess_kurtosis},
                                   {"f", r.f}});
            }
            j["ranking"] = ranking;
            emit(j, est_out);
        } else if (collapse->parsed()) {
            const auto panel = col_data.load();
            const auto horizons = parse_horizons(col_horizons);
            json rows = json::array();
            for (const auto& [name, ps] : panel) {
                const auto res = collapse_series(ps.series.values(), horizons);
                rows.push_back({{"ticker", name}, {"h_star", res.h_star}, {"c_star", res.c_star},
                                {"eta_lo", res.eta_band.lo}, {"eta_hi", res.eta_band.hi}});
            }
            emit(json{{"horizons", horizons}, {"collapse", rows}}, col_out);
        } else if (spectrum->parsed()) {
            const auto panel = spec_data.load();
            json rows = json::array();
            for (const auto& [name, ps] : panel) {
                const auto psd = welch_psd(ps.series.values(), segment);
                const auto fit = spectral_slope(psd, default_band(segment));
                rows.push_back({{"ticker", name},
                                {"beta", fit.beta},
                                {"implied_h", 0.5 * (fit.beta + 1.0)},
                                {"bins", fit.bins},
                                {"f", psd.f},
                                {"s", psd.s}});
            }
            emit(json{{"segment", segment}, {"spectra", rows}}, spec_out);
        } else if (verify->parsed()) {
            if (!do_prop1 && !do_cor1) do_prop1 = do_cor1 = true;
            json j;
            bool ok = true;
            if (do_prop1) {
                const auto r = verify_prop1(3, 4, 256, {1, 2, 4}, trials, verify_seed);
                j["prop1"] = r;
                ok = ok && r.max_abs_residual == 0.0;
                std::cerr << "prop1: max residual " << r.max_abs_residual << '\n';
            }
            if (do_cor1) {
                StackSpec spec;
                const std::size_t b = (spec.kernel - 1) * (std::size_t{1} << spec.L);
                const std::size_t cor_trials = std::min<std::size_t>(trials, 20);
                const auto r = verify_corollary1(spec, 512, b, cor_trials, verify_seed);
                StackSpec untied = spec;
                untied.tied = false;
                const auto c = verify_corollary1(untied, 512, b, cor_trials, verify_seed);
                const auto bd = verify_boundary_confinement(spec, 512, 64, cor_trials, verify_seed);
                j["corollary1"] = r;
                j["corollary1_control"] = c;
                j["boundary_confinement"] = bd;
                ok = ok && r.max_abs_residual <= 1e-12 && bd.max_offending <= bd.receptive_field;
                std::cerr << "corollary1: max residual " << r.max_abs_residual << ", untied median "
                          << c.median_residual() << '\n';
            }
            j["passed"] = ok;
            emit(j, verify_out);
            return ok ? 0 : 2;
        } else if (train_cmd->parsed()) {
            auto exp = load_experiment(train_config, train_data);
            const auto panel = train_data.load();
            const auto data = build_all(panel, exp.train);
            std::vector<Variant> variants;
            for (const auto& v : train_variants_s) variants.push_back(parse_variant(v));
            const auto models = train_variants(variants, exp, data);
            const auto manifest = save_models(models, out_path(train_out));
            std::cout << manifest.dump(2) << '\n';
        } else if (eval_cmd->parsed()) {
            auto exp = load_experiment(eval_config, eval_data);
            const auto panel = eval_data.load();
            const auto data = build_all(panel, exp.train);
            auto models = load_models(out_path(eval_models));
            EvalOptions opts;
            opts.collapse_tickers = eval_collapse_tickers;
            opts.collapse_horizons = exp.train.horizons;
            const auto rep = evaluate(models, data, opts);
            write_reports(rep, eval_out, "comparison");
        } else if (ablate->parsed()) {
            auto exp = load_experiment(abl_config, abl_data);
            const auto panel = abl_data.load();
            const auto data = build_all(panel, exp.train);
            auto models = train_variants(ablation_variants(), exp, data);
            EvalOptions opts;
            opts.table = "ablation";
            opts.baselines = false;
            opts.collapse_samples = abl_collapse_tickers == 0 ? 0 : 1000;
            opts.collapse_tickers = abl_collapse_tickers;
            opts.collapse_horizons = exp.train.horizons;
            const auto rep = evaluate(models, data, opts);
            write_reports(rep, abl_out, "ablation");
        } else if (report->parsed()) {
            std::ifstream in(report_in);
            if (!in) throw UserError("cannot read '" + report_in + "'");
            std::stringstream buf;
            buf << in.rdbuf();
            const auto rep = parse_report_json(buf.str());
            const auto text = render(rep, parse_report_format(report_format));
            if (report_out.empty()) {
                std::cout << text;
            } else {
                write_text(report_out, text);
            }
        }
    } catch (const UserError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: bad JSON: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
