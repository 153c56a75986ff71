#include "selfsim/model.hpp"

#include "selfsim/wavelet.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>

namespace selfsim::nn {

const char* to_string(HeadKind h) { return h == HeadKind::flow ? "flow" : "gaussian"; }

HeadKind parse_head_kind(const std::string& name) {
    if (name == "flow") return HeadKind::flow;
    if (name == "gaussian") return HeadKind::gaussian;
    throw std::invalid_argument("unknown head kind '" + name + "'");
}

void ModelConfig::validate() const {
    if (kernel_size < 2) throw std::invalid_argument("kernel_size must be >= 2");
    if (flow_layers < 1) throw std::invalid_argument("flow_layers must be >= 1");
    if (n_filters < 1) throw std::invalid_argument("n_filters must be >= 1");
    if (L > 16) throw std::invalid_argument("L must be <= 16");
    if (!(lambda_spec >= 0.0) || !(lambda_shape >= 0.0)) throw std::invalid_argument("loss weights must be >= 0");
}

std::size_t ModelConfig::receptive_field() const noexcept {
    return 1 + (kernel_size - 1) * ((std::size_t{1} << L) - 1);
}

void to_json(nlohmann::ordered_json& j, const ModelConfig& c) {
    j = nlohmann::ordered_json{{"L", c.L},
                               {"n_filters", c.n_filters},
                               {"kernel_size", c.kernel_size},
                               {"flow_layers", c.flow_layers},
                               {"weight_tied", c.weight_tied},
                               {"use_dwt", c.use_dwt},
                               {"use_film", c.use_film},
                               {"head", to_string(c.head)},
                               {"spec_loss", to_string(c.spec_loss)},
                               {"lambda_spec", c.lambda_spec},
                               {"lambda_shape", c.lambda_shape}};
}

void from_json(const nlohmann::ordered_json& j, ModelConfig& c) {
    ModelConfig d;
    c.L = j.value("L", d.L);
    c.n_filters = j.value("n_filters", d.n_filters);
    c.kernel_size = j.value("kernel_size", d.kernel_size);
    c.flow_layers = j.value("flow_layers", d.flow_layers);
    c.weight_tied = j.value("weight_tied", d.weight_tied);
    c.use_dwt = j.value("use_dwt", d.use_dwt);
    c.use_film = j.value("use_film", d.use_film);
    c.head = parse_head_kind(j.value("head", std::string(to_string(d.head))));
    c.spec_loss = parse_spectral_mode(j.value("spec_loss", std::string(to_string(d.spec_loss))));
    c.lambda_spec = j.value("lambda_spec", d.lambda_spec);
    c.lambda_shape = j.value("lambda_shape", d.lambda_shape);
    c.validate();
}

std::size_t conv_param_count(const ModelConfig& c) {
    const std::size_t nf = c.n_filters;
    const std::size_t per_block = 2 * (nf * nf * c.kernel_size + nf) + (nf * nf + nf);
    return per_block * (c.weight_tied ? (c.L > 0 ? 1 : 0) : c.L);
}

// ---------------------------------------------------------------- blocks

namespace {

Var gated_block(Var x, const BlockVars& p, std::size_t kernel, std::size_t dilation, const FilmVars* film) {
    if (x.rows() != p.w_out.rows()) {
        throw std::invalid_argument("block expects " + std::to_string(p.w_out.rows()) + " channels, got " +
                                    std::to_string(x.rows()));
    }
    Var a = tanh(conv1d(x, p.w_tanh, p.b_tanh, kernel, dilation));
    Var b = sigmoid(conv1d(x, p.w_sig, p.b_sig, kernel, dilation));
    Var y = add(x, conv1d(mul(a, b), p.w_out, p.b_out, 1, 1));
    if (film != nullptr) y = nn::film(y, film->gamma, film->beta);
    return y;
}

}  // namespace

Var sewn_block(Var x, const BlockVars& shared, std::size_t kernel, std::size_t dilation, const FilmVars* film) {
    return gated_block(x, shared, kernel, dilation, film);
}

Var wavenet_block(Var x, const BlockVars& own, std::size_t kernel, std::size_t dilation, const FilmVars* film) {
    return gated_block(x, own, kernel, dilation, film);
}

// ---------------------------------------------------------------- flow

FlowTransform::FlowTransform(std::vector<double> theta, std::size_t horizon)
    : theta_(std::move(theta)), sqrt_t_(std::sqrt(static_cast<double>(horizon))) {
    if (theta_.empty() || theta_.size() % 2 != 0) throw std::invalid_argument("flow theta must hold (s, t) pairs");
    if (horizon == 0) throw std::invalid_argument("horizon must be >= 1");
}

double FlowTransform::forward(double z) const {
    const std::size_t k = layers();
    double u = z;
    for (std::size_t i = 0; i + 1 < k; ++i) u = std::sinh(std::exp(theta_[2 * i]) * std::asinh(u) + theta_[2 * i + 1]);
    u = std::exp(theta_[2 * (k - 1)]) * u + theta_[2 * (k - 1) + 1];
    return sqrt_t_ * u;
}

FlowTransform::Inverse FlowTransform::inverse(double r) const {
    const std::size_t k = layers();
    double u = (r / sqrt_t_ - theta_[2 * (k - 1) + 1]) * std::exp(-theta_[2 * (k - 1)]);
    double log_det = -std::log(sqrt_t_) - theta_[2 * (k - 1)];
    for (std::size_t i = k - 1; i-- > 0;) {
        const double w = (std::asinh(u) - theta_[2 * i + 1]) * std::exp(-theta_[2 * i]);
        const double aw = std::fabs(w);
        const double log_cosh = aw + std::log1p(std::exp(-2.0 * aw)) - std::numbers::ln2;
        log_det += -theta_[2 * i] + log_cosh - 0.5 * std::log1p(u * u);
        u = std::sinh(w);
    }
    return {u, log_det};
}

double FlowTransform::log_prob(double r) const {
    const auto inv = inverse(r);
    return -0.5 * inv.z * inv.z - 0.5 * std::log(2.0 * std::numbers::pi) + inv.log_det;
}

double FlowTransform::cdf(double r) const { return 0.5 * std::erfc(-inverse(r).z / std::numbers::sqrt2); }

Var flow_log_prob(Var theta, double r, std::size_t horizon) {
    if (theta.cols() != 1 || theta.rows() < 2 || theta.rows() % 2 != 0) {
        throw std::invalid_argument("flow theta must be a 2K x 1 column");
    }
    if (!std::isfinite(r)) throw std::invalid_argument("flow target must be finite");
    Tape& tape = *theta.tape();
    const std::size_t k = theta.rows() / 2;
    const double sqrt_t = std::sqrt(static_cast<double>(horizon));
    Var s_last = element(theta, 2 * (k - 1));
    Var t_last = element(theta, 2 * (k - 1) + 1);
    Var u = mul(sub(tape.constant(Tensor::scalar(r / sqrt_t)), t_last), exp(neg(s_last)));
    Var log_det = add_scalar(neg(s_last), -std::log(sqrt_t));
    for (std::size_t i = k - 1; i-- > 0;) {
        Var s = element(theta, 2 * i);
        Var t = element(theta, 2 * i + 1);
        Var w = mul(sub(asinh(u), t), exp(neg(s)));
        log_det = add(log_det, sub(sub(log_cosh(w), s), half_log1p_square(u)));
        u = sinh(w);
    }
    Var base = add_scalar(scale(square(u), -0.5), -0.5 * std::log(2.0 * std::numbers::pi));
    return add(base, log_det);
}

Var flow_push(Var theta, double z, std::size_t horizon) {
    Tape& tape = *theta.tape();
    const std::size_t k = theta.rows() / 2;
    Var u = tape.constant(Tensor::scalar(z));
    for (std::size_t i = 0; i + 1 < k; ++i) {
        u = sinh(add(mul(exp(element(theta, 2 * i)), asinh(u)), element(theta, 2 * i + 1)));
    }
    u = add(mul(exp(element(theta, 2 * (k - 1))), u), element(theta, 2 * (k - 1) + 1));
    return scale(u, std::sqrt(static_cast<double>(horizon)));
}

Var nll(const std::vector<Var>& thetas, std::span<const double> targets, std::size_t horizon) {
    if (thetas.empty() || thetas.size() != targets.size()) {
        throw std::invalid_argument("nll needs a non-empty batch with one theta per target");
    }
    std::vector<Var> terms;
    terms.reserve(thetas.size());
    for (std::size_t i = 0; i < thetas.size(); ++i) terms.push_back(neg(flow_log_prob(thetas[i], targets[i], horizon)));
    return mean_of(terms);
}

// ---------------------------------------------------------------- model

namespace {

Tensor uniform(std::size_t rows, std::size_t cols, double bound, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    Tensor t(rows, cols);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = dist(rng);
    return t;
}

std::size_t head_outputs(const ModelConfig& c) { return c.head == HeadKind::flow ? 2 * c.flow_layers : 2; }

}  // namespace

std::string Model::block_prefix(std::size_t level) const {
    return config_.weight_tied ? std::string("shared") : "block" + std::to_string(level);
}

std::size_t Model::block_triples() const noexcept {
    if (config_.L == 0) return 0;
    return config_.weight_tied ? 1 : config_.L;
}

Model::Model(ModelConfig config, std::uint64_t seed) : config_(config) {
    config_.validate();
    std::mt19937_64 rng(seed);
    const std::size_t nf = config_.n_filters;
    const std::size_t k = config_.kernel_size;
    const std::size_t cin = config_.in_channels();
    params_.add("input.w", uniform(nf, cin, 1.0 / std::sqrt(static_cast<double>(cin)), rng));
    params_.add("input.b", Tensor(nf, 1));
    for (std::size_t l = 0; l < block_triples(); ++l) {
        const std::string p = block_prefix(l);
        const double conv_bound = 1.0 / std::sqrt(static_cast<double>(nf * k));
        params_.add(p + ".tanh.w", uniform(nf, nf * k, conv_bound, rng));
        params_.add(p + ".tanh.b", Tensor(nf, 1));
        params_.add(p + ".sig.w", uniform(nf, nf * k, conv_bound, rng));
        params_.add(p + ".sig.b", Tensor(nf, 1));
        params_.add(p + ".out.w", uniform(nf, nf, 1.0 / std::sqrt(static_cast<double>(nf)), rng));
        params_.add(p + ".out.b", Tensor(nf, 1));
    }
    if (config_.use_film) {
        params_.add("film.w1", uniform(nf, 1, 1.0, rng));
        params_.add("film.b1", Tensor(nf, 1));
        params_.add("film.w2", Tensor(2 * nf, nf));
        params_.add("film.b2", Tensor(2 * nf, 1));
    }
    const std::size_t head_in = nf + (config_.use_film ? 1 : 0);
    params_.add("head.w1", uniform(nf, head_in, 1.0 / std::sqrt(static_cast<double>(head_in)), rng));
    params_.add("head.b1", Tensor(nf, 1));
    params_.add("head.w2", Tensor(head_outputs(config_), nf));
    params_.add("head.b2", Tensor(head_outputs(config_), 1));
}

Model::Model(ModelConfig config, ParamStore params) : config_(config), params_(std::move(params)) {
    const Model reference(config_, 0);
    const auto& want = reference.params_.entries();
    const auto& have = params_.entries();
    if (want.size() != have.size()) throw std::invalid_argument("checkpoint parameter count does not match config");
    for (std::size_t i = 0; i < want.size(); ++i) {
        if (want[i].name != have[i].name || want[i].rows != have[i].rows || want[i].cols != have[i].cols) {
            throw std::invalid_argument("checkpoint parameter '" + have[i].name + "' does not match config");
        }
    }
}

BoundModel Model::bind(Tape& tape, bool frozen) {
    auto get = [&](const std::string& name) {
        return frozen ? tape.constant(params_.value(name)) : tape.param(params_, name);
    };
    BoundModel m;
    m.in_w = get("input.w");
    m.in_b = get("input.b");
    for (std::size_t l = 0; l < block_triples(); ++l) {
        const std::string p = block_prefix(l);
        m.blocks.push_back({get(p + ".tanh.w"), get(p + ".tanh.b"), get(p + ".sig.w"), get(p + ".sig.b"),
                            get(p + ".out.w"), get(p + ".out.b")});
    }
    if (config_.use_film) {
        m.film = std::array<Var, 4>{get("film.w1"), get("film.b1"), get("film.w2"), get("film.b2")};
    }
    m.head = {get("head.w1"), get("head.b1"), get("head.w2"), get("head.b2")};
    return m;
}

std::optional<FilmVars> Model::film(Tape& tape, const BoundModel& m, double h_hat) const {
    if (!config_.use_film || !m.film) return std::nullopt;
    const auto& f = *m.film;
    const std::size_t nf = config_.n_filters;
    Var h = tape.constant(Tensor::scalar(h_hat - 0.5));
    Var hidden = tanh(affine(f[0], h, f[1]));
    Var out = affine(f[2], hidden, f[3]);
    return FilmVars{add_scalar(rows(out, 0, nf), 1.0), rows(out, nf, nf)};
}

Var Model::context(Tape& tape, const BoundModel& m, std::span<const double> window, double h_hat) const {
    Tensor input;
    if (config_.use_dwt) {
        const auto pair = dwt_db4(window);
        const std::size_t half = pair.approx.size();
        input = Tensor(2, half);
        std::copy(pair.approx.begin(), pair.approx.end(), input.row(0));
        std::copy(pair.detail.begin(), pair.detail.end(), input.row(1));
    } else {
        if (window.empty()) throw std::invalid_argument("empty input window");
        input = Tensor(1, window.size(), std::vector<double>(window.begin(), window.end()));
    }
    // Only the last receptive field of steps can reach c_T.
    const std::size_t keep = std::min(input.cols(), config_.receptive_field());
    if (keep < input.cols()) {
        Tensor cropped(input.rows(), keep);
        const std::size_t off = input.cols() - keep;
        for (std::size_t r = 0; r < input.rows(); ++r) {
            std::copy(input.row(r) + off, input.row(r) + input.cols(), cropped.row(r));
        }
        input = std::move(cropped);
    }
    Var x = conv1d(tape.constant(std::move(input)), m.in_w, m.in_b, 1, 1);
    const auto fv = film(tape, m, h_hat);
    const FilmVars* fp = fv ? &*fv : nullptr;
    for (std::size_t l = 0; l < config_.L; ++l) {
        const std::size_t d = std::size_t{1} << l;
        if (config_.weight_tied) {
            x = sewn_block(x, m.blocks.front(), config_.kernel_size, d, fp);
        } else {
            x = wavenet_block(x, m.blocks[l], config_.kernel_size, d, fp);
        }
    }
    return last_column(x);
}

Var Model::theta(Tape& tape, const BoundModel& m, Var context, double h_hat) const {
    Var in = config_.use_film ? concat_rows(context, tape.constant(Tensor::scalar(h_hat - 0.5))) : context;
    Var hidden = tanh(affine(m.head[0], in, m.head[1]));
    return affine(m.head[2], hidden, m.head[3]);
}

std::vector<double> Model::context_value(std::span<const double> window, double h_hat) {
    Tape tape;
    const auto m = bind(tape, true);
    const auto& v = context(tape, m, window, h_hat).value();
    return {v.data().begin(), v.data().end()};
}

FlowTransform Model::predictive(std::span<const double> window, double h_hat, std::size_t horizon) {
    Tape tape;
    const auto m = bind(tape, true);
    const auto& v = theta(tape, m, context(tape, m, window, h_hat), h_hat).value();
    return FlowTransform({v.data().begin(), v.data().end()}, horizon);
}

double Model::log_prob(std::span<const double> window, double h_hat, double r, std::size_t horizon) {
    return predictive(window, h_hat, horizon).log_prob(r);
}

std::vector<double> Model::sample(std::span<const double> window, double h_hat, std::size_t horizon, std::size_t n,
                                  std::uint64_t seed) {
    const auto flow = predictive(window, h_hat, horizon);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> out(n);
    for (auto& v : out) v = flow.forward(normal(rng));
    return out;
}

BlockWeights Model::block_weights(std::size_t level) const {
    if (level >= config_.L) throw std::out_of_range("block level out of range");
    const std::string p = block_prefix(level);
    return {params_.value(p + ".tanh.w"), params_.value(p + ".tanh.b"), params_.value(p + ".sig.w"),
            params_.value(p + ".sig.b"),  params_.value(p + ".out.w"),  params_.value(p + ".out.b")};
}

nlohmann::ordered_json Model::to_json() const {
    nlohmann::ordered_json j;
    j["config"] = config_;
    auto& arr = j["params"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < params_.entries().size(); ++i) {
        const auto& e = params_.entry(i);
        const auto v = params_.value(i);
        arr.push_back({{"name", e.name},
                       {"rows", e.rows},
                       {"cols", e.cols},
                       {"values", std::vector<double>(v.data().begin(), v.data().end())}});
    }
    return j;
}

Model Model::from_json(const nlohmann::ordered_json& j) {
    const auto config = j.at("config").get<ModelConfig>();
    ParamStore store;
    for (const auto& p : j.at("params")) {
        const auto rows = p.at("rows").get<std::size_t>();
        const auto cols = p.at("cols").get<std::size_t>();
        store.add(p.at("name").get<std::string>(), Tensor(rows, cols, p.at("values").get<std::vector<double>>()));
    }
    return Model(config, std::move(store));
}

void Model::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint '" + path + "'");
    out << to_json().dump(1) << '\n';
}

Model Model::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read checkpoint '" + path + "'");
    return from_json(nlohmann::ordered_json::parse(in));
}

// ---------------------------------------------------------------- Adam

void Adam::step(ParamStore& params) {
    auto values = params.values();
    auto grads = params.grads();
    if (m_.size() != values.size()) {
        m_.assign(values.size(), 0.0);
        v_.assign(values.size(), 0.0);
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double g = grads[i];
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g * g;
        values[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
    }
}

}  // namespace selfsim::nn
