#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace selfsim {

/// A uniformly sampled univariate series of increments (log-returns unless stated).
///
/// Values are validated on construction: the series is non-empty and every
/// value is finite. Instances are immutable afterwards.
class TimeSeries {
public:
    TimeSeries(std::string id, std::vector<double> values, double dt = 1.0);

    [[nodiscard]] const std::string& id() const noexcept { return id_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] double dt() const noexcept { return dt_; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }

    [[nodiscard]] TimeSeries slice(std::size_t first, std::size_t count) const;

private:
    std::string id_;
    std::vector<double> values_;
    double dt_;
};

/// One ticker's series with its calendar labels (one label per value).
struct PanelSeries {
    TimeSeries series;
    std::vector<std::string> dates;
};

/// Ticker-keyed collection of series. Keys are unique by construction.
using Panel = std::map<std::string, PanelSeries>;

/// Half-open index range [first, first + count).
struct IndexRange {
    std::size_t first = 0;
    std::size_t count = 0;
};

struct Standardized {
    TimeSeries series;
    double mean;
    double std;
};

/// (x - mean) / std with both statistics taken from `stats_window` only.
/// Population (1/N) variance. Throws std::domain_error on a zero-variance window.
[[nodiscard]] Standardized standardize(const TimeSeries& x, IndexRange stats_window);

/// Inverse of standardize: y * std + mean.
[[nodiscard]] TimeSeries unstandardize(const TimeSeries& y, double mean, double std);

/// Context windows paired with horizon-T forward sums.
///
/// Entry i reads x[starts[i], starts[i] + window) and its target is
/// sum x[starts[i] + window, starts[i] + window + horizon).
struct WindowSet {
    std::size_t window = 0;
    std::size_t horizon = 1;
    std::vector<std::size_t> starts;
    std::vector<double> targets;

    [[nodiscard]] std::size_t size() const noexcept { return starts.size(); }
    [[nodiscard]] std::size_t first_target_index(std::size_t i) const {
        return starts[i] + window;
    }
    [[nodiscard]] std::size_t last_target_index(std::size_t i) const {
        return starts[i] + window + horizon - 1;
    }
};

struct WindowSplit {
    WindowSet train;
    WindowSet test;
};

/// Splits x into train/test windows. Test pairs are exactly those whose target
/// indices all fall in the final `split` samples; train targets end before them.
/// Throws std::invalid_argument if len(x) < window + horizon + split.
[[nodiscard]] WindowSplit make_windows(const TimeSeries& x, std::size_t window,
                                       std::size_t horizon, std::size_t split);

/// Population mean and variance.
[[nodiscard]] double mean(std::span<const double> x);
[[nodiscard]] double variance(std::span<const double> x);

}  // namespace selfsim
