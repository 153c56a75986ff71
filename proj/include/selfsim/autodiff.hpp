#pragma once

#include "selfsim/tensor.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace selfsim::nn {

/// Flat storage for every learnable tensor plus matching gradient slots.
/// Entries keep insertion order, which is also the checkpoint order.
class ParamStore {
public:
    struct Entry {
        std::string name;
        std::size_t offset = 0;
        std::size_t rows = 0;
        std::size_t cols = 0;
        [[nodiscard]] std::size_t size() const noexcept { return rows * cols; }
    };

    /// Registers a new tensor; throws std::invalid_argument on a duplicate name.
    std::size_t add(const std::string& name, const Tensor& init);

    [[nodiscard]] bool contains(const std::string& name) const { return index_.count(name) != 0; }
    [[nodiscard]] std::size_t index_of(const std::string& name) const;
    [[nodiscard]] const Entry& entry(std::size_t idx) const { return entries_.at(idx); }
    [[nodiscard]] const std::vector<Entry>& entries() const noexcept { return entries_; }

    [[nodiscard]] Tensor value(std::size_t idx) const;
    [[nodiscard]] Tensor value(const std::string& name) const { return value(index_of(name)); }
    void set_value(std::size_t idx, const Tensor& v);
    void set_value(const std::string& name, const Tensor& v) { set_value(index_of(name), v); }

    [[nodiscard]] std::span<double> values() noexcept { return values_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] std::span<double> grads() noexcept { return grads_; }
    [[nodiscard]] std::span<const double> grads() const noexcept { return grads_; }
    [[nodiscard]] std::span<double> grad(std::size_t idx);

    [[nodiscard]] std::size_t total_size() const noexcept { return values_.size(); }
    void zero_grad();

private:
    std::vector<Entry> entries_;
    std::map<std::string, std::size_t> index_;
    std::vector<double> values_;
    std::vector<double> grads_;
};

class Tape;

/// Handle to a node recorded on a Tape.
class Var {
public:
    Var() = default;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    [[nodiscard]] const Tensor& value() const;
    [[nodiscard]] const Tensor& grad() const;
    [[nodiscard]] std::size_t rows() const { return value().rows(); }
    [[nodiscard]] std::size_t cols() const { return value().cols(); }
    [[nodiscard]] double item() const { return value().item(); }
    [[nodiscard]] std::size_t id() const noexcept { return id_; }
    [[nodiscard]] Tape* tape() const noexcept { return tape_; }

private:
    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Reverse-mode tape. Nodes are appended in evaluation order; backward() walks
/// them in reverse and pushes gradients into parents and into the ParamStore
/// slots of parameter leaves. One tape per forward pass; not thread-safe.
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, std::size_t self)>;

    /// Leaf that never receives a gradient.
    Var constant(Tensor v);
    /// Leaf whose gradient is kept on the tape (inputs under test).
    Var leaf(Tensor v);
    /// Leaf bound to a ParamStore entry; backward() accumulates into the store.
    Var param(ParamStore& store, std::size_t idx);
    Var param(ParamStore& store, const std::string& name) { return param(store, store.index_of(name)); }

    /// Records an op result. `parents` decide whether the node needs a gradient.
    Var record(Tensor value, std::vector<std::size_t> parents, BackwardFn backward);

    /// Seeds d(out)/d(out) = 1 for a scalar and propagates.
    void backward(Var out);
    /// Seeds an arbitrary upstream gradient of out's shape.
    void backward(Var out, const Tensor& seed);

    [[nodiscard]] const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
    [[nodiscard]] const Tensor& grad(std::size_t id) const { return nodes_.at(id).grad; }
    /// Gradient slot of a parent, allocated on first use. Null if it takes no gradient.
    [[nodiscard]] Tensor* grad_slot(std::size_t id);
    [[nodiscard]] bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
    [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        std::vector<std::size_t> parents;
        BackwardFn backward;
        ParamStore* store = nullptr;
        std::size_t param_index = 0;
    };
    std::vector<Node> nodes_;
};

// Elementwise ops require equal shapes unless noted.
[[nodiscard]] Var add(Var a, Var b);
[[nodiscard]] Var sub(Var a, Var b);
[[nodiscard]] Var mul(Var a, Var b);
[[nodiscard]] Var scale(Var a, double s);
[[nodiscard]] Var add_scalar(Var a, double s);
[[nodiscard]] Var neg(Var a);
[[nodiscard]] Var square(Var a);
[[nodiscard]] Var tanh(Var a);
[[nodiscard]] Var sigmoid(Var a);
[[nodiscard]] Var exp(Var a);
[[nodiscard]] Var sinh(Var a);
[[nodiscard]] Var asinh(Var a);
/// log(cosh(a)), stable for large |a|.
[[nodiscard]] Var log_cosh(Var a);
/// 0.5 * log(1 + a^2)
[[nodiscard]] Var half_log1p_square(Var a);

/// Sum of all entries, 1x1.
[[nodiscard]] Var sum(Var a);
/// Mean over a list of 1x1 vars.
[[nodiscard]] Var mean_of(const std::vector<Var>& xs);
/// Entry (r, c) as 1x1.
[[nodiscard]] Var element(Var a, std::size_t r, std::size_t c = 0);
/// Rows [first, first+count) of a column or matrix.
[[nodiscard]] Var rows(Var a, std::size_t first, std::size_t count);
/// Last time step of a C x N map, as C x 1.
[[nodiscard]] Var last_column(Var a);
/// Last `count` columns of a C x N map.
[[nodiscard]] Var crop_tail(Var a, std::size_t count);
/// Stacks columns vertically: (a over b).
[[nodiscard]] Var concat_rows(Var a, Var b);

/// W (m x n) times x (n x p) plus bias (m x 1) broadcast over columns.
[[nodiscard]] Var affine(Var w, Var x, Var bias);
/// Causal dilated convolution, see causal_dilated_conv.
[[nodiscard]] Var conv1d(Var x, Var w, Var bias, std::size_t kernel, std::size_t dilation);
/// gamma (C x 1) * x + beta (C x 1), broadcast over time.
[[nodiscard]] Var film(Var x, Var gamma, Var beta);

}  // namespace selfsim::nn
