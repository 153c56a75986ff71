#pragma once

#include <fftw3.h>

#include <cstddef>
#include <mutex>
#include <stdexcept>

namespace selfsim::detail {

// FFTW planning is not thread-safe; execution on distinct plans is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

/// In-place complex DFT buffer, X_k = sum_j x_j exp(-2 pi i j k / n).
class FftBuffer {
public:
    explicit FftBuffer(std::size_t n) : n_(n) {
        data_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
        if (data_ == nullptr) throw std::bad_alloc();
        std::lock_guard lock(fftw_planner_mutex());
        plan_ = fftw_plan_dft_1d(static_cast<int>(n), data_, data_, FFTW_FORWARD, FFTW_ESTIMATE);
        for (std::size_t i = 0; i < n; ++i) {
            data_[i][0] = 0.0;
            data_[i][1] = 0.0;
        }
    }
    FftBuffer(const FftBuffer&) = delete;
    FftBuffer& operator=(const FftBuffer&) = delete;
    ~FftBuffer() {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan_);
        fftw_free(data_);
    }

    void set(std::size_t i, double re, double im) {
        data_[i][0] = re;
        data_[i][1] = im;
    }
    [[nodiscard]] double re(std::size_t i) const { return data_[i][0]; }
    [[nodiscard]] double im(std::size_t i) const { return data_[i][1]; }
    [[nodiscard]] std::size_t size() const noexcept { return n_; }
    void forward() { fftw_execute(plan_); }

private:
    std::size_t n_;
    fftw_complex* data_ = nullptr;
    fftw_plan plan_ = nullptr;
};

}  // namespace selfsim::detail
