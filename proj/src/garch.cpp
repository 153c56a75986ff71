#include "selfsim/garch.hpp"

#include "selfsim/series.hpp"

#include <gsl/gsl_multimin.h>
#include <gsl/gsl_vector.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace selfsim {

double gaussian_nll(double x, double mean, double var) {
    const double d = x - mean;
    return 0.5 * (std::log(2.0 * std::numbers::pi * var) + d * d / var);
}

double IidGaussian::log_prob(double r, std::size_t horizon) const {
    const double t = static_cast<double>(horizon);
    return -gaussian_nll(r, t * mu, t * var);
}

double IidGaussian::cdf(double r, std::size_t horizon) const {
    const double t = static_cast<double>(horizon);
    return 0.5 * std::erfc(-(r - t * mu) / std::sqrt(2.0 * t * var));
}

std::vector<double> IidGaussian::sample(std::size_t horizon, std::size_t n, std::uint64_t seed) const {
    const double t = static_cast<double>(horizon);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(t * mu, std::sqrt(t * var));
    std::vector<double> out(n);
    for (auto& v : out) v = normal(rng);
    return out;
}

IidGaussian iid_gaussian_fit(std::span<const double> train) {
    if (train.empty()) throw std::invalid_argument("empty training series");
    const double v = variance(train);
    if (!(v > 0.0)) throw std::domain_error("training series has zero variance");
    return {mean(train), v};
}

double iid_gaussian_nll(std::span<const double> train, std::span<const double> targets, std::size_t horizon) {
    if (targets.empty()) throw std::invalid_argument("no test targets");
    const auto fit = iid_gaussian_fit(train);
    double s = 0.0;
    for (double r : targets) s -= fit.log_prob(r, horizon);
    return s / static_cast<double>(targets.size());
}

double garch_log_likelihood(const GarchParams& p, std::span<const double> r) {
    double s2 = p.sigma2_0;
    double ll = 0.0;
    for (std::size_t t = 0; t < r.size(); ++t) {
        const double e = r[t] - p.mu;
        ll -= gaussian_nll(r[t], p.mu, s2);
        s2 = p.omega + p.alpha * e * e + p.beta * s2;
    }
    return ll;
}

namespace {

double logistic(double v) { return 1.0 / (1.0 + std::exp(-v)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

struct FitData {
    std::span<const double> r;
    double mu;
    double s2_0;
};

GarchParams unpack(const gsl_vector* v, const FitData& d) {
    GarchParams p;
    p.omega = std::exp(gsl_vector_get(v, 0));
    const double pers = kGarchMaxPersistence * logistic(gsl_vector_get(v, 1));
    const double share = logistic(gsl_vector_get(v, 2));
    p.alpha = pers * share;
    p.beta = pers * (1.0 - share);
    p.mu = d.mu;
    p.sigma2_0 = d.s2_0;
    p.n = d.r.size();
    return p;
}

double objective(const gsl_vector* v, void* data) {
    const auto& d = *static_cast<const FitData*>(data);
    const double ll = garch_log_likelihood(unpack(v, d), d.r);
    if (!std::isfinite(ll)) return std::numeric_limits<double>::max();
    return -ll / static_cast<double>(d.r.size());
}

}  // namespace

GarchParams garch_fit(std::span<const double> train) {
    if (train.size() < 250) {
        throw std::invalid_argument("GARCH fit needs at least 250 observations, got " + std::to_string(train.size()));
    }
    FitData data{train, mean(train), variance(train)};
    if (!(data.s2_0 > 0.0)) throw std::domain_error("training series has zero variance");

    gsl_multimin_function fn;
    fn.n = 3;
    fn.f = &objective;
    fn.params = &data;
    gsl_vector* x = gsl_vector_alloc(3);
    gsl_vector* step = gsl_vector_alloc(3);
    gsl_multimin_fminimizer* solver = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 3);

    double best = std::numeric_limits<double>::infinity();
    GarchParams best_p;
    for (double pers : {0.3, 0.8, 0.97}) {
        for (double share : {0.05, 0.2, 0.5}) {
            gsl_vector_set(x, 0, std::log(data.s2_0 * (1.0 - pers)));
            gsl_vector_set(x, 1, logit(pers / kGarchMaxPersistence));
            gsl_vector_set(x, 2, logit(share));
            gsl_vector_set_all(step, 0.5);
            gsl_multimin_fminimizer_set(solver, &fn, x, step);
            for (int iter = 0; iter < 3000; ++iter) {
                if (gsl_multimin_fminimizer_iterate(solver) != 0) break;
                if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(solver), 1e-9) == GSL_SUCCESS) break;
            }
            const double f = solver->fval;
            if (f < best && f < std::numeric_limits<double>::max()) {
                best = f;
                best_p = unpack(solver->x, data);
            }
        }
    }
    gsl_multimin_fminimizer_free(solver);
    gsl_vector_free(step);
    gsl_vector_free(x);
    if (!std::isfinite(best)) throw std::runtime_error("GARCH likelihood is non-finite at every start");
    best_p.log_likelihood = -best * static_cast<double>(train.size());
    return best_p;
}

std::vector<double> garch_simulate(double omega, double alpha, double beta, std::size_t n, std::uint64_t seed,
                                   std::size_t burn) {
    if (!(omega > 0.0) || alpha < 0.0 || beta < 0.0 || alpha + beta >= 1.0) {
        throw std::invalid_argument("GARCH simulation needs omega > 0, alpha, beta >= 0, alpha + beta < 1");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    double s2 = omega / (1.0 - alpha - beta);
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t t = 0; t < n + burn; ++t) {
        const double r = std::sqrt(s2) * normal(rng);
        if (t >= burn) out.push_back(r);
        s2 = omega + alpha * r * r + beta * s2;
    }
    return out;
}

GarchForecast garch_forecast(const GarchParams& p, std::span<const double> daily,
                             std::span<const std::size_t> origins, std::size_t horizon) {
    if (horizon == 0) throw std::invalid_argument("horizon must be >= 1");
    GarchForecast out;
    const double pers = p.persistence();
    const double uncond = pers < 1.0 ? p.omega / (1.0 - pers) : 0.0;
    // sigma2[t] is the conditional variance of daily[t] given daily[0 .. t-1]
    std::vector<double> sigma2(daily.size() + 1);
    sigma2[0] = p.sigma2_0;
    for (std::size_t t = 0; t < daily.size(); ++t) {
        const double e = daily[t] - p.mu;
        sigma2[t + 1] = p.omega + p.alpha * e * e + p.beta * sigma2[t];
    }
    const double t_d = static_cast<double>(horizon);
    for (std::size_t o : origins) {
        if (o > daily.size()) throw std::out_of_range("forecast origin beyond the series");
        double v = 0.0;
        double decay = 1.0;
        for (std::size_t h = 0; h < horizon; ++h) {
            v += uncond + decay * (sigma2[o] - uncond);
            decay *= pers;
        }
        out.mean.push_back(t_d * p.mu);
        out.variance.push_back(v);
    }
    return out;
}

double garch_nll(const GarchParams& p, std::span<const double> daily, std::span<const std::size_t> origins,
                 std::span<const double> targets, std::size_t horizon) {
    if (origins.size() != targets.size() || targets.empty()) {
        throw std::invalid_argument("garch_nll needs one origin per target");
    }
    const auto fc = garch_forecast(p, daily, origins, horizon);
    double s = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) s += gaussian_nll(targets[i], fc.mean[i], fc.variance[i]);
    return s / static_cast<double>(targets.size());
}

}  // namespace selfsim
