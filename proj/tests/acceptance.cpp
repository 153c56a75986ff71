// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include "oracles.hpp"

#include "selfsim/calibration.hpp"
#include "selfsim/collapse.hpp"
#include "selfsim/equivariance.hpp"
#include "selfsim/estimators.hpp"
#include "selfsim/evaluation.hpp"
#include "selfsim/fgn.hpp"
#include "selfsim/garch.hpp"
#include "selfsim/model.hpp"
#include "selfsim/significance.hpp"
#include "selfsim/spectral.hpp"
#include "selfsim/trainer.hpp"
#include "selfsim/wavelet.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace selfsim;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

Outcome c1_prop1() {
    const auto r = verify_prop1(3, 4, 256, {1, 2, 4}, 100, 2024);
    return {r.max_abs_residual == 0.0 && r.trials == 100, "max residual " + fmt("%.3g", r.max_abs_residual)};
}

Outcome c2_corollary() {
    StackSpec tied;
    const std::size_t b = (tied.kernel - 1) * (std::size_t{1} << tied.L);
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        worst = std::max(worst, verify_corollary1(tied, 512, b, 1, seed).max_abs_residual);
    }
    StackSpec untied = tied;
    untied.tied = false;
    const auto ctl = verify_corollary1(untied, 512, b, 20, 99);
    std::ostringstream os;
    os << "tied max " << worst << ", untied median " << ctl.median_residual();
    return {worst <= 1e-12 && ctl.median_residual() >= 1e-3, os.str()};
}

Outcome c3_params() {
    nn::ModelConfig c;
    c.L = 4;
    c.n_filters = 16;
    c.kernel_size = 3;
    const auto tied = nn::conv_param_count(c);
    c.weight_tied = false;
    const auto untied = nn::conv_param_count(c);
    bool ratio = true;
    for (std::size_t L = 2; L <= 6; ++L) {
        nn::ModelConfig t;
        t.L = L;
        auto u = t;
        u.weight_tied = false;
        ratio = ratio && nn::conv_param_count(u) == L * nn::conv_param_count(t);
    }
    return {tied == 1840 && untied == 7360 && ratio,
            "tied " + std::to_string(tied) + ", untied " + std::to_string(untied) + (ratio ? ", ratio L" : ", ratio broken")};
}

Outcome c4_nll_anchors() {
    // A long test segment keeps the Monte Carlo error of overlapping 21-day targets
    // well below the tolerance.
    TrainConfig cfg;
    cfg.test_split = 5000;
    const auto panel = synthetic_universe(25, 5400, 0.5, 0.5, 4);
    nn::ModelConfig mc;
    bool ok = true;
    std::ostringstream os;
    for (auto [h, target, tol] : {std::tuple{std::size_t{1}, 1.419, 0.05}, std::tuple{std::size_t{21}, 2.941, 0.08}}) {
        const auto ds = build_dataset(panel, h, cfg);
        nn::Model fresh(mc, 0);
        const double flow = mean_nll(fresh, ds, true);
        double iid = 0.0;
        for (const auto& td : ds.tickers) {
            const std::vector<double> train(td.x.begin(), td.x.begin() + static_cast<long>(td.train_end()));
            iid += iid_gaussian_nll(train, td.windows.test.targets, h);
        }
        iid /= static_cast<double>(ds.tickers.size());
        ok = ok && std::abs(flow - target) <= tol && std::abs(iid - target) <= tol;
        os << "T=" << h << ": flow " << fmt("%.3f", flow) << ", iid " << fmt("%.3f", iid) << "; ";
    }
    return {ok, os.str()};
}

Outcome c5_collapse() {
    bool ok = true;
    std::ostringstream os;
    for (double h : {0.5, 0.7}) {
        const auto x = synth_fgn(HurstExponent(h), 1 << 16, 505);
        const auto r = collapse_series(x.values(), {1, 5, 21, 63});
        ok = ok && std::abs(r.h_star - h) <= 0.05 && r.c_star <= 0.05;
        os << "H=" << h << ": H* " << fmt("%.3f", r.h_star) << " C* " << fmt("%.4f", r.c_star) << "; ";
    }
    return {ok, os.str()};
}

Outcome c6_estimators() {
    bool ok = true;
    double worst_rs = 0.0, worst_av = 0.0;
    for (double h : {0.3, 0.5, 0.7, 0.8}) {
        const auto x = synth_fgn(HurstExponent(h), 1 << 16, 606);
        worst_rs = std::max(worst_rs, std::abs(rs_hurst(x.values()).value - h));
        // (1 + AVAR slope) / 2 estimates H - 1/2 for fGn
        worst_av = std::max(worst_av, std::abs(avar_hurst(x.values()).value - (h - 0.5)));
    }
    double rho = 0.0;
    for (std::uint64_t s = 0; s < 100; ++s) rho += fscore(TimeSeries("g", oracle::gaussian(10000, 7000 + s))).rho;
    rho /= 100.0;
    ok = worst_rs <= 0.07 && worst_av <= 0.1 && rho >= 0.97 && rho <= 1.03;
    std::ostringstream os;
    os << "R/S max bias " << fmt("%.3f", worst_rs) << ", AVAR max error " << fmt("%.3f", worst_av) << ", IID rho mean "
       << fmt("%.4f", rho);
    return {ok, os.str()};
}

Outcome c7_spectral() {
    const auto x = synth_fgn(HurstExponent(0.7), 1 << 14, 707);
    const double b_fgn = spectral_slope(welch_psd(x.values(), 256), default_band(256)).beta;
    const auto g = oracle::gaussian(1 << 14, 708);
    const double b_wn = spectral_slope(welch_psd(g, 256), default_band(256)).beta;
    return {std::abs(b_fgn - 0.4) <= 0.1 && std::abs(b_wn) <= 0.1,
            "fGn beta " + fmt("%.3f", b_fgn) + ", white beta " + fmt("%.3f", b_wn)};
}

Outcome c8_wavelet() {
    double recon = 0.0, energy = 0.0, detail = 0.0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto x = oracle::gaussian(256, 800 + s);
        const auto p = dwt_db4(x);
        const auto y = idwt_db4(p);
        double ex = 0.0, ec = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            recon = std::max(recon, std::abs(x[i] - y[i]));
            ex += x[i] * x[i];
        }
        for (double v : p.approx) ec += v * v;
        for (double v : p.detail) ec += v * v;
        energy = std::max(energy, std::abs(ex - ec) / ex);
    }
    for (double c : {-3.0, 0.5, 7.25}) {
        for (double d : dwt_db4(std::vector<double>(128, c)).detail) detail = std::max(detail, std::abs(d));
    }
    std::ostringstream os;
    os << "reconstruction " << recon << ", energy " << energy << ", constant detail " << detail;
    return {recon <= 1e-10 && energy <= 1e-10 && detail <= 1e-12, os.str()};
}

Outcome c9_gradients() {
    std::mt19937_64 rng(909);
    double worst = 0.0;
    std::size_t checked = 0;
    const std::size_t configs = 24;
    for (std::size_t trial = 0; trial < configs; ++trial) {
        nn::ModelConfig c;
        c.L = 1 + rng() % 3;
        c.n_filters = 2 + rng() % 3;
        c.kernel_size = 2 + rng() % 2;
        c.flow_layers = 1 + rng() % 3;
        c.weight_tied = rng() % 2;
        c.use_dwt = rng() % 2;
        c.use_film = rng() % 2;
        c.head = rng() % 4 == 0 ? nn::HeadKind::gaussian : nn::HeadKind::flow;
        const std::size_t horizon = trial % 2 ? 1 : 21;
        nn::Model m(c, trial);
        std::normal_distribution<double> nd(0.0, 0.3);
        for (auto& v : m.params().values()) v = nd(rng);
        const auto window = oracle::gaussian(c.use_dwt ? 16 : 8, 900 + trial);
        const double h = 0.3 + 0.04 * static_cast<double>(trial % 10);
        const double r = 2.0 * nd(rng);
        m.params().zero_grad();
        {
            nn::Tape tape;
            const auto b = m.bind(tape);
            tape.backward(nn::flow_log_prob(m.theta(tape, b, m.context(tape, b, window, h), h), r, horizon));
        }
        const std::vector<double> grad(m.params().grads().begin(), m.params().grads().end());
        auto vals = m.params().values();
        for (std::size_t i = 0; i < vals.size(); ++i) {
            const double keep = vals[i];
            vals[i] = keep + 1e-5;
            const double up = m.log_prob(window, h, r, horizon);
            vals[i] = keep - 1e-5;
            const double dn = m.log_prob(window, h, r, horizon);
            vals[i] = keep;
            const double fd = (up - dn) / 2e-5;
            worst = std::max(worst, std::abs(fd - grad[i]) / std::max({std::abs(fd), std::abs(grad[i]), 1e-4}));
            ++checked;
        }
    }
    std::ostringstream os;
    os << configs << " configs, " << checked << " parameters, max relative error " << worst;
    return {worst <= 1e-4, os.str()};
}

Outcome c10_surrogate_null() {
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.eval_horizons = {1};
    const auto panel = synthetic_universe(6, 1000, 0.3, 0.8, 10);
    std::map<std::size_t, Dataset> data;
    data.emplace(1, build_dataset(panel, 1, cfg));
    nn::ModelConfig full;
    full.spec_loss = SpectralMode::variance_surrogate;
    std::vector<TrainedModel> models;
    for (auto v : {Variant::se_wavenet_full, Variant::no_spectral}) {
        models.push_back(train_model(to_string(v), variant_config(v, full), data, cfg, 0));
    }
    EvalOptions opts;
    opts.table = "ablation";
    opts.baselines = false;
    opts.collapse_samples = 0;
    opts.resamples = 200;
    const auto rep = evaluate(models, data, opts);
    const double delta = rep.row("no_spectral").horizons.at(1).delta;
    return {delta == 0.0 && !std::signbit(delta), "dNLL " + fmt("%+.17g", delta)};
}

Outcome c11_learned_dependence() {
    const auto t0 = std::chrono::steady_clock::now();
    TrainConfig cfg;  // 5 epochs, batch 64, W=128, last 252 test
    cfg.eval_horizons = {1};
    const auto panel = synthetic_universe(25, 2520, 0.8, 0.8, 11);
    std::map<std::size_t, Dataset> data;
    data.emplace(1, build_dataset(panel, 1, cfg));
    nn::ModelConfig mc;  // L=4, n_f=16
    std::vector<TrainedModel> models{train_model("se_wavenet_full", mc, data, cfg, 0)};
    EvalOptions opts;
    opts.collapse_samples = 0;
    opts.resamples = 200;
    const auto rep = evaluate(models, data, opts);
    const double nn_nll = rep.row("se_wavenet_full").horizons.at(1).mean_nll;
    const double iid = rep.row(kIidName).horizons.at(1).mean_nll;
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ostringstream os;
    os << "model " << fmt("%.4f", nn_nll) << " vs IID " << fmt("%.4f", iid) << " (gain " << fmt("%.4f", iid - nn_nll)
       << " nats), " << fmt("%.0f", secs) << " s";
    return {iid - nn_nll >= 0.02 && secs <= 900.0, os.str()};
}

Outcome c12_statistics() {
    // exact signed-rank vs enumeration
    std::mt19937_64 rng(1212);
    std::normal_distribution<double> nd(0.2, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 80; ++trial) {
        const std::size_t n = 5 + trial % 8;
        std::vector<double> d(n);
        for (auto& v : d) v = std::round(nd(rng) * 3.0) / 3.0;
        std::vector<double> nz;
        for (double v : d) if (v != 0.0) nz.push_back(v);
        if (nz.size() < 5) continue;
        const auto ranks = signed_rank_magnitudes(nz);
        double w_obs = 0.0, total = 0.0;
        for (std::size_t i = 0; i < nz.size(); ++i) {
            total += ranks[i];
            if (nz[i] > 0) w_obs += ranks[i];
        }
        std::size_t extreme = 0;
        const std::size_t patterns = std::size_t{1} << nz.size();
        for (std::size_t mask = 0; mask < patterns; ++mask) {
            double w = 0.0;
            for (std::size_t i = 0; i < nz.size(); ++i) if (mask >> i & 1) w += ranks[i];
            if (std::abs(w - total / 2) >= std::abs(w_obs - total / 2) - 1e-9) ++extreme;
        }
        const double p_enum = std::min(1.0, static_cast<double>(extreme) / static_cast<double>(patterns));
        worst = std::max(worst, std::abs(wilcoxon_signed_rank(d).p_value - p_enum));
    }
    // Holm monotonicity
    bool monotone = true;
    std::uniform_real_distribution<double> u(0.0, 0.3);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<double> p(1 + trial % 8);
        for (auto& v : p) v = u(rng);
        const auto h = holm_bonferroni(p);
        for (std::size_t i = 0; i < p.size(); ++i) {
            monotone = monotone && h.adjusted[i] >= p[i] && h.adjusted[i] <= 1.0;
            for (std::size_t j = 0; j < p.size(); ++j) {
                if (p[i] <= p[j]) monotone = monotone && h.adjusted[i] <= h.adjusted[j];
            }
        }
    }
    // bootstrap width vs analytic IID width
    double ratio = 0.0;
    for (int s = 0; s < 20; ++s) {
        const auto g = oracle::gaussian(252, 1300 + s);
        const auto ci = block_bootstrap_ci(g, 21, 1000, 0.95, s);
        ratio += (ci.hi - ci.lo) / (2.0 * 1.96 * std::sqrt(oracle::var(g) / 252.0));
    }
    ratio /= 20.0;
    std::ostringstream os;
    os << "Wilcoxon max |p - p_enum| " << worst << ", Holm monotone " << (monotone ? "yes" : "no")
       << ", bootstrap/analytic width " << fmt("%.3f", ratio);
    return {worst <= 1e-12 && monotone && std::abs(ratio - 1.0) <= 0.25, os.str()};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        double budget_s;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {"dilation identity exact", 5.0, c1_prop1},
        {"tied stack level shift", 30.0, c2_corollary},
        {"conv parameter counts", 0.0, c3_params},
        {"analytic NLL anchors", 0.0, c4_nll_anchors},
        {"collapse recovery", 120.0, c5_collapse},
        {"estimator consistency", 0.0, c6_estimators},
        {"spectral law", 0.0, c7_spectral},
        {"wavelet exactness", 0.0, c8_wavelet},
        {"gradient correctness", 0.0, c9_gradients},
        {"surrogate-null ablation", 0.0, c10_surrogate_null},
        {"learned dependence beats IID", 900.0, c11_learned_dependence},
        {"protocol statistics", 0.0, c12_statistics},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto& c = criteria[i];
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.budget_s > 0.0 && secs > c.budget_s) {
            o.pass = false;
            o.detail += " [over time budget " + fmt("%.0f", c.budget_s) + " s]";
        }
        if (!o.pass) ++failures;
        std::printf("%s %2zu %-30s %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", i + 1, c.name, o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
