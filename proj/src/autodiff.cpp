#include "selfsim/autodiff.hpp"

#include "selfsim/conv.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace selfsim::nn {

// ---------------------------------------------------------------- ParamStore

std::size_t ParamStore::add(const std::string& name, const Tensor& init) {
    if (index_.count(name) != 0) throw std::invalid_argument("duplicate parameter '" + name + "'");
    Entry e{name, values_.size(), init.rows(), init.cols()};
    values_.insert(values_.end(), init.data().begin(), init.data().end());
    grads_.resize(values_.size(), 0.0);
    entries_.push_back(e);
    index_[name] = entries_.size() - 1;
    return entries_.size() - 1;
}

std::size_t ParamStore::index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("no parameter named '" + name + "'");
    return it->second;
}

Tensor ParamStore::value(std::size_t idx) const {
    const auto& e = entries_.at(idx);
    return Tensor(e.rows, e.cols,
                  std::vector<double>(values_.begin() + static_cast<std::ptrdiff_t>(e.offset),
                                      values_.begin() + static_cast<std::ptrdiff_t>(e.offset + e.size())));
}

void ParamStore::set_value(std::size_t idx, const Tensor& v) {
    const auto& e = entries_.at(idx);
    if (v.rows() != e.rows || v.cols() != e.cols) {
        throw std::invalid_argument("shape mismatch setting parameter '" + e.name + "'");
    }
    std::copy(v.data().begin(), v.data().end(), values_.begin() + static_cast<std::ptrdiff_t>(e.offset));
}

std::span<double> ParamStore::grad(std::size_t idx) {
    const auto& e = entries_.at(idx);
    return std::span<double>(grads_).subspan(e.offset, e.size());
}

void ParamStore::zero_grad() { std::fill(grads_.begin(), grads_.end(), 0.0); }

// ---------------------------------------------------------------- Var / Tape

const Tensor& Var::value() const { return tape_->value(id_); }
const Tensor& Var::grad() const { return tape_->grad(id_); }

Var Tape::constant(Tensor v) {
    Node n;
    n.value = std::move(v);
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
}

Var Tape::leaf(Tensor v) {
    Node n;
    n.value = std::move(v);
    n.requires_grad = true;
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
}

Var Tape::param(ParamStore& store, std::size_t idx) {
    Node n;
    n.value = store.value(idx);
    n.requires_grad = true;
    n.store = &store;
    n.param_index = idx;
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::vector<std::size_t> parents, BackwardFn backward) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = std::any_of(parents.begin(), parents.end(),
                                  [this](std::size_t p) { return nodes_.at(p).requires_grad; });
    n.parents = std::move(parents);
    if (n.requires_grad) n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
}

Tensor* Tape::grad_slot(std::size_t id) {
    Node& n = nodes_.at(id);
    if (!n.requires_grad) return nullptr;
    if (n.grad.size() != n.value.size()) n.grad = Tensor(n.value.rows(), n.value.cols());
    return &n.grad;
}

void Tape::backward(Var out) {
    if (out.value().size() != 1) throw std::invalid_argument("backward() without seed needs a scalar output");
    backward(out, Tensor::scalar(1.0));
}

void Tape::backward(Var out, const Tensor& seed) {
    if (out.tape() != this) throw std::invalid_argument("variable belongs to another tape");
    if (!seed.same_shape(out.value())) throw std::invalid_argument("backward seed shape mismatch");
    Tensor* g = grad_slot(out.id());
    if (g == nullptr) return;
    for (std::size_t i = 0; i < seed.size(); ++i) (*g)[i] += seed[i];
    for (std::size_t id = out.id() + 1; id-- > 0;) {
        Node& n = nodes_[id];
        if (!n.requires_grad || n.grad.size() == 0) continue;
        if (n.store != nullptr) {
            auto dst = n.store->grad(n.param_index);
            for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += n.grad[i];
        } else if (n.backward) {
            n.backward(*this, id);
        }
    }
}

// ---------------------------------------------------------------- ops

namespace {

Tape& tape_of(Var a) {
    if (a.tape() == nullptr) throw std::invalid_argument("uninitialised variable");
    return *a.tape();
}

Tape& tape_of(Var a, Var b) {
    if (a.tape() != b.tape() || a.tape() == nullptr) throw std::invalid_argument("variables on different tapes");
    return *a.tape();
}

void require_same_shape(Var a, Var b, const char* op) {
    if (!a.value().same_shape(b.value())) throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

// Elementwise unary op with derivative expressed through input x and output y.
template <class F, class D>
Var unary(Var a, F f, D df) {
    Tape& t = tape_of(a);
    const Tensor& x = a.value();
    Tensor y(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
    const std::size_t ia = a.id();
    return t.record(std::move(y), {ia}, [ia, df](Tape& tp, std::size_t self) {
        const Tensor& xv = tp.value(ia);
        const Tensor& yv = tp.value(self);
        const Tensor& g = tp.grad(self);
        Tensor* ga = tp.grad_slot(ia);
        for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * df(xv[i], yv[i]);
    });
}

}  // namespace

Var add(Var a, Var b) {
    Tape& t = tape_of(a, b);
    require_same_shape(a, b, "add");
    Tensor y = a.value();
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += b.value()[i];
    const std::size_t ia = a.id();
    const std::size_t ib = b.id();
    return t.record(std::move(y), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        for (std::size_t p : {ia, ib}) {
            if (Tensor* gp = tp.grad_slot(p)) {
                for (std::size_t i = 0; i < g.size(); ++i) (*gp)[i] += g[i];
            }
        }
    });
}

Var sub(Var a, Var b) {
    Tape& t = tape_of(a, b);
    require_same_shape(a, b, "sub");
    Tensor y = a.value();
    for (std::size_t i = 0; i < y.size(); ++i) y[i] -= b.value()[i];
    const std::size_t ia = a.id();
    const std::size_t ib = b.id();
    return t.record(std::move(y), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        if (Tensor* ga = tp.grad_slot(ia)) {
            for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
        }
        if (Tensor* gb = tp.grad_slot(ib)) {
            for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] -= g[i];
        }
    });
}

Var mul(Var a, Var b) {
    Tape& t = tape_of(a, b);
    require_same_shape(a, b, "mul");
    Tensor y = a.value();
    for (std::size_t i = 0; i < y.size(); ++i) y[i] *= b.value()[i];
    const std::size_t ia = a.id();
    const std::size_t ib = b.id();
    return t.record(std::move(y), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        const Tensor& av = tp.value(ia);
        const Tensor& bv = tp.value(ib);
        if (Tensor* ga = tp.grad_slot(ia)) {
            for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * bv[i];
        }
        if (Tensor* gb = tp.grad_slot(ib)) {
            for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * av[i];
        }
    });
}

Var scale(Var a, double s) {
    return unary(a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Var add_scalar(Var a, double s) {
    return unary(a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Var neg(Var a) { return scale(a, -1.0); }

Var square(Var a) {
    return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var tanh(Var a) {
    return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
    return unary(a, [](double x) { return nn::sigmoid(x); }, [](double, double y) { return y * (1.0 - y); });
}

Var exp(Var a) {
    return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var sinh(Var a) {
    return unary(a, [](double x) { return std::sinh(x); }, [](double x, double) { return std::cosh(x); });
}

Var asinh(Var a) {
    return unary(a, [](double x) { return std::asinh(x); },
                 [](double x, double) { return 1.0 / std::sqrt(1.0 + x * x); });
}

Var log_cosh(Var a) {
    return unary(
        a,
        [](double x) {
            const double ax = std::fabs(x);
            return ax + std::log1p(std::exp(-2.0 * ax)) - std::log(2.0);
        },
        [](double x, double) { return std::tanh(x); });
}

Var half_log1p_square(Var a) {
    return unary(a, [](double x) { return 0.5 * std::log1p(x * x); },
                 [](double x, double) { return x / (1.0 + x * x); });
}

Var sum(Var a) {
    Tape& t = tape_of(a);
    double s = 0.0;
    for (double v : a.value().data()) s += v;
    const std::size_t ia = a.id();
    return t.record(Tensor::scalar(s), {ia}, [ia](Tape& tp, std::size_t self) {
        const double g = tp.grad(self)[0];
        Tensor* ga = tp.grad_slot(ia);
        for (std::size_t i = 0; i < ga->size(); ++i) (*ga)[i] += g;
    });
}

Var mean_of(const std::vector<Var>& xs) {
    if (xs.empty()) throw std::invalid_argument("mean of an empty batch");
    Tape& t = tape_of(xs.front());
    double s = 0.0;
    std::vector<std::size_t> ids;
    ids.reserve(xs.size());
    for (const Var& v : xs) {
        if (v.tape() != &t || v.value().size() != 1) throw std::invalid_argument("mean_of expects 1x1 vars");
        s += v.item();
        ids.push_back(v.id());
    }
    const double inv = 1.0 / static_cast<double>(xs.size());
    auto parents = ids;
    return t.record(Tensor::scalar(s * inv), std::move(parents), [ids, inv](Tape& tp, std::size_t self) {
        const double g = tp.grad(self)[0] * inv;
        for (std::size_t p : ids) {
            if (Tensor* gp = tp.grad_slot(p)) (*gp)[0] += g;
        }
    });
}

Var element(Var a, std::size_t r, std::size_t c) {
    Tape& t = tape_of(a);
    const Tensor& x = a.value();
    if (r >= x.rows() || c >= x.cols()) throw std::out_of_range("element index out of range");
    const std::size_t ia = a.id();
    return t.record(Tensor::scalar(x(r, c)), {ia}, [ia, r, c](Tape& tp, std::size_t self) {
        (*tp.grad_slot(ia))(r, c) += tp.grad(self)[0];
    });
}

Var rows(Var a, std::size_t first, std::size_t count) {
    Tape& t = tape_of(a);
    const Tensor& x = a.value();
    if (first + count > x.rows()) throw std::out_of_range("row slice out of range");
    Tensor y(count, x.cols());
    std::copy(x.row(first), x.row(first) + count * x.cols(), y.row(0));
    const std::size_t ia = a.id();
    return t.record(std::move(y), {ia}, [ia, first](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        Tensor* ga = tp.grad_slot(ia);
        double* dst = ga->row(first);
        for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
    });
}

Var last_column(Var a) {
    Tape& t = tape_of(a);
    const Tensor& x = a.value();
    if (x.cols() == 0) throw std::invalid_argument("last_column of an empty map");
    Tensor y(x.rows(), 1);
    for (std::size_t r = 0; r < x.rows(); ++r) y[r] = x(r, x.cols() - 1);
    const std::size_t ia = a.id();
    return t.record(std::move(y), {ia}, [ia](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        Tensor* ga = tp.grad_slot(ia);
        for (std::size_t r = 0; r < g.rows(); ++r) (*ga)(r, ga->cols() - 1) += g[r];
    });
}

Var crop_tail(Var a, std::size_t count) {
    Tape& t = tape_of(a);
    const Tensor& x = a.value();
    if (count >= x.cols()) return a;
    const std::size_t off = x.cols() - count;
    Tensor y(x.rows(), count);
    for (std::size_t r = 0; r < x.rows(); ++r) std::copy(x.row(r) + off, x.row(r) + x.cols(), y.row(r));
    const std::size_t ia = a.id();
    return t.record(std::move(y), {ia}, [ia, off](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        Tensor* ga = tp.grad_slot(ia);
        for (std::size_t r = 0; r < g.rows(); ++r) {
            for (std::size_t c = 0; c < g.cols(); ++c) (*ga)(r, c + off) += g(r, c);
        }
    });
}

Var concat_rows(Var a, Var b) {
    Tape& t = tape_of(a, b);
    const Tensor& x = a.value();
    const Tensor& z = b.value();
    if (x.cols() != z.cols()) throw std::invalid_argument("concat_rows: column mismatch");
    Tensor y(x.rows() + z.rows(), x.cols());
    std::copy(x.data().begin(), x.data().end(), y.data().begin());
    std::copy(z.data().begin(), z.data().end(), y.data().begin() + static_cast<std::ptrdiff_t>(x.size()));
    const std::size_t ia = a.id();
    const std::size_t ib = b.id();
    const std::size_t na = x.size();
    return t.record(std::move(y), {ia, ib}, [ia, ib, na](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        if (Tensor* ga = tp.grad_slot(ia)) {
            for (std::size_t i = 0; i < na; ++i) (*ga)[i] += g[i];
        }
        if (Tensor* gb = tp.grad_slot(ib)) {
            for (std::size_t i = na; i < g.size(); ++i) (*gb)[i - na] += g[i];
        }
    });
}

Var affine(Var w, Var x, Var bias) {
    Tape& t = tape_of(w, x);
    tape_of(w, bias);
    const Tensor& wv = w.value();
    const Tensor& xv = x.value();
    const Tensor& bv = bias.value();
    if (wv.cols() != xv.rows()) throw std::invalid_argument("affine: inner dimension mismatch");
    if (bv.size() != wv.rows()) throw std::invalid_argument("affine: bias length mismatch");
    Tensor y(wv.rows(), xv.cols());
    for (std::size_t i = 0; i < wv.rows(); ++i) {
        for (std::size_t c = 0; c < xv.cols(); ++c) {
            double s = bv[i];
            for (std::size_t k = 0; k < wv.cols(); ++k) s += wv(i, k) * xv(k, c);
            y(i, c) = s;
        }
    }
    const std::size_t iw = w.id();
    const std::size_t ix = x.id();
    const std::size_t ib = bias.id();
    return t.record(std::move(y), {iw, ix, ib}, [iw, ix, ib](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        const Tensor& wv2 = tp.value(iw);
        const Tensor& xv2 = tp.value(ix);
        Tensor* gw = tp.grad_slot(iw);
        Tensor* gx = tp.grad_slot(ix);
        Tensor* gb = tp.grad_slot(ib);
        for (std::size_t i = 0; i < g.rows(); ++i) {
            for (std::size_t c = 0; c < g.cols(); ++c) {
                const double gi = g(i, c);
                if (gb != nullptr) (*gb)[i] += gi;
                for (std::size_t k = 0; k < wv2.cols(); ++k) {
                    if (gw != nullptr) (*gw)(i, k) += gi * xv2(k, c);
                    if (gx != nullptr) (*gx)(k, c) += gi * wv2(i, k);
                }
            }
        }
    });
}

Var conv1d(Var x, Var w, Var bias, std::size_t kernel, std::size_t dilation) {
    Tape& t = tape_of(x, w);
    tape_of(x, bias);
    Tensor y = causal_dilated_conv(x.value(), w.value(), bias.value(), kernel, dilation);
    const std::size_t ix = x.id();
    const std::size_t iw = w.id();
    const std::size_t ib = bias.id();
    return t.record(std::move(y), {ix, iw, ib}, [ix, iw, ib, kernel, dilation](Tape& tp, std::size_t self) {
        causal_dilated_conv_backward(tp.value(ix), tp.value(iw), tp.grad(self), kernel, dilation,
                                     tp.grad_slot(ix), tp.grad_slot(iw), tp.grad_slot(ib));
    });
}

Var film(Var x, Var gamma, Var beta) {
    Tape& t = tape_of(x, gamma);
    tape_of(x, beta);
    const Tensor& xv = x.value();
    const Tensor& gv = gamma.value();
    const Tensor& bv = beta.value();
    if (gv.size() != xv.rows() || bv.size() != xv.rows()) throw std::invalid_argument("film: channel mismatch");
    Tensor y(xv.rows(), xv.cols());
    for (std::size_t r = 0; r < xv.rows(); ++r) {
        for (std::size_t c = 0; c < xv.cols(); ++c) y(r, c) = gv[r] * xv(r, c) + bv[r];
    }
    const std::size_t ix = x.id();
    const std::size_t ig = gamma.id();
    const std::size_t ib = beta.id();
    return t.record(std::move(y), {ix, ig, ib}, [ix, ig, ib](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        const Tensor& xv2 = tp.value(ix);
        const Tensor& gv2 = tp.value(ig);
        Tensor* gx = tp.grad_slot(ix);
        Tensor* gg = tp.grad_slot(ig);
        Tensor* gb = tp.grad_slot(ib);
        for (std::size_t r = 0; r < g.rows(); ++r) {
            for (std::size_t c = 0; c < g.cols(); ++c) {
                const double gi = g(r, c);
                if (gx != nullptr) (*gx)(r, c) += gi * gv2[r];
                if (gg != nullptr) (*gg)[r] += gi * xv2(r, c);
                if (gb != nullptr) (*gb)[r] += gi;
            }
        }
    });
}

}  // namespace selfsim::nn
