#include "selfsim/series.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace selfsim {

TimeSeries::TimeSeries(std::string id, std::vector<double> values, double dt)
    : id_(std::move(id)), values_(std::move(values)), dt_(dt) {
    if (values_.empty()) {
        throw std::invalid_argument("series '" + id_ + "' is empty");
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) {
            throw std::invalid_argument("series '" + id_ + "' has a non-finite value at index " +
                                        std::to_string(i));
        }
    }
    if (!(dt_ > 0.0)) {
        throw std::invalid_argument("sampling step must be positive");
    }
}

TimeSeries TimeSeries::slice(std::size_t first, std::size_t count) const {
    if (first + count > values_.size()) {
        throw std::out_of_range("slice exceeds series '" + id_ + "'");
    }
    return TimeSeries(id_, std::vector<double>(values_.begin() + static_cast<std::ptrdiff_t>(first),
                                               values_.begin() + static_cast<std::ptrdiff_t>(first + count)),
                      dt_);
}

double mean(std::span<const double> x) {
    if (x.empty()) {
        throw std::invalid_argument("mean of empty sequence");
    }
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
    const double m = mean(x);
    double ss = 0.0;
    for (double v : x) {
        ss += (v - m) * (v - m);
    }
    return ss / static_cast<double>(x.size());
}

Standardized standardize(const TimeSeries& x, IndexRange stats_window) {
    if (stats_window.count == 0 || stats_window.first + stats_window.count > x.size()) {
        throw std::invalid_argument("statistics window lies outside the series");
    }
    const auto window = x.values().subspan(stats_window.first, stats_window.count);
    const double m = mean(window);
    const double sd = std::sqrt(variance(window));
    if (!(sd > 0.0)) {
        throw std::domain_error("zero variance in statistics window of '" + x.id() + "'");
    }
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = (x[i] - m) / sd;
    }
    return {TimeSeries(x.id(), std::move(out), x.dt()), m, sd};
}

TimeSeries unstandardize(const TimeSeries& y, double mean, double std) {
    std::vector<double> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        out[i] = y[i] * std + mean;
    }
    return TimeSeries(y.id(), std::move(out), y.dt());
}

namespace {

WindowSet collect(const TimeSeries& x, std::size_t window, std::size_t horizon,
                  std::size_t first_start, std::size_t last_start) {
    WindowSet set;
    set.window = window;
    set.horizon = horizon;
    const auto v = x.values();
    for (std::size_t s = first_start; s <= last_start; ++s) {
        double sum = 0.0;
        for (std::size_t u = 0; u < horizon; ++u) {
            sum += v[s + window + u];
        }
        set.starts.push_back(s);
        set.targets.push_back(sum);
    }
    return set;
}

}  // namespace

WindowSplit make_windows(const TimeSeries& x, std::size_t window, std::size_t horizon,
                         std::size_t split) {
    if (window == 0 || horizon == 0) {
        throw std::invalid_argument("window and horizon must be positive");
    }
    if (split < horizon) {
        throw std::invalid_argument("test split shorter than the horizon");
    }
    const std::size_t required = window + horizon + split;
    if (x.size() < required) {
        throw std::invalid_argument("series '" + x.id() + "' too short: need at least " +
                                    std::to_string(required) + " samples, have " +
                                    std::to_string(x.size()));
    }
    const std::size_t n = x.size();
    const std::size_t boundary = n - split;  // first test index
    WindowSplit out;
    // train: start + window + horizon - 1 <= boundary - 1
    out.train = collect(x, window, horizon, 0, boundary - window - horizon);
    // test: start + window >= boundary and start + window + horizon - 1 <= n - 1
    out.test = collect(x, window, horizon, boundary - window, n - window - horizon);
    return out;
}

}  // namespace selfsim
