#pragma once

#include "selfsim/series.hpp"

#include <cstdint>
#include <vector>

namespace selfsim {

/// Hurst exponent, restricted to the open interval (0, 1).
class HurstExponent {
public:
    explicit HurstExponent(double value);
    [[nodiscard]] double value() const noexcept { return value_; }

private:
    double value_;
};

/// Autocovariance of unit-variance fractional Gaussian noise at lag k:
/// 0.5 * (|k+1|^{2H} - 2|k|^{2H} + |k-1|^{2H}).
[[nodiscard]] double fgn_autocov(HurstExponent h, std::size_t k);

/// Exact fGn sample of length n via circulant embedding, falling back to the
/// Hosking recursion if the embedding has a negative eigenvalue.
/// Deterministic for a given seed. Requires n >= 2.
[[nodiscard]] TimeSeries synth_fgn(HurstExponent h, std::size_t n, std::uint64_t seed);

/// O(n^2) Durbin-Levinson (Hosking) sampler. Exposed for tests and as the fallback path.
[[nodiscard]] TimeSeries synth_fgn_hosking(HurstExponent h, std::size_t n, std::uint64_t seed);

/// Eigenvalues of the size-2n circulant embedding of the fGn covariance.
[[nodiscard]] std::vector<double> circulant_eigenvalues(HurstExponent h, std::size_t n);

struct AggregateSeries {
    std::size_t horizon = 1;
    std::vector<double> values;
};

/// Rolling T-sums s_t = x_{t-T+1} + ... + x_t for t = T-1 .. n-1 (length n - T + 1).
[[nodiscard]] AggregateSeries aggregate(const TimeSeries& x, std::size_t horizon);

/// Sums over disjoint consecutive blocks of length T (floor(n / T) values).
[[nodiscard]] AggregateSeries block_aggregate(std::span<const double> x, std::size_t horizon);

}  // namespace selfsim
