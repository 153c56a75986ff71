#pragma once

#include <array>
#include <span>
#include <vector>

namespace selfsim {

/// Daubechies-4 analysis low-pass taps, (1+√3, 3+√3, 3−√3, 1−√3) / (4√2).
[[nodiscard]] const std::array<double, 4>& db4_lowpass();
/// Quadrature-mirror high-pass taps g_k = (-1)^k h_{3-k}.
[[nodiscard]] const std::array<double, 4>& db4_highpass();

/// One-level periodic DWT output. Odd inputs are extended by one periodic
/// sample before the transform; `original_length` records the input length.
struct DWTPair {
    std::vector<double> approx;
    std::vector<double> detail;
    std::size_t original_length = 0;

    [[nodiscard]] bool padded() const noexcept { return original_length % 2 == 1; }
};

/// a_j = sum_k h_k x_{(2j+k) mod N}, d_j = sum_k g_k x_{(2j+k) mod N}.
/// Throws std::invalid_argument for inputs shorter than 4.
[[nodiscard]] DWTPair dwt_db4(std::span<const double> x);

/// Synthesis (transpose of the analysis operator); exact inverse of dwt_db4.
[[nodiscard]] std::vector<double> idwt_db4(const DWTPair& pair);

}  // namespace selfsim
