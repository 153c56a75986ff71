#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace selfsim::nn {

/// Dense row-major matrix of doubles. Feature maps are channels x time;
/// parameters use whatever 2-D shape their op expects.
class Tensor {
public:
    Tensor() = default;
    Tensor(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) throw std::invalid_argument("tensor data/shape mismatch");
    }

    [[nodiscard]] static Tensor column(std::vector<double> v) {
        const std::size_t n = v.size();
        return Tensor(n, 1, std::move(v));
    }
    [[nodiscard]] static Tensor scalar(double v) { return Tensor(1, 1, v); }

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] bool same_shape(const Tensor& o) const noexcept {
        return rows_ == o.rows_ && cols_ == o.cols_;
    }

    [[nodiscard]] double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    [[nodiscard]] double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    [[nodiscard]] double& operator[](std::size_t i) { return data_[i]; }
    [[nodiscard]] double operator[](std::size_t i) const { return data_[i]; }

    [[nodiscard]] double* row(std::size_t r) { return data_.data() + r * cols_; }
    [[nodiscard]] const double* row(std::size_t r) const { return data_.data() + r * cols_; }
    [[nodiscard]] std::span<double> data() noexcept { return data_; }
    [[nodiscard]] std::span<const double> data() const noexcept { return data_; }
    [[nodiscard]] double item() const {
        if (data_.size() != 1) throw std::logic_error("item() on a non-scalar tensor");
        return data_[0];
    }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

}  // namespace selfsim::nn
