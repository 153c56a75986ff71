#include "selfsim/spectral.hpp"

#include "fftw_util.hpp"
#include "selfsim/linfit.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace selfsim {

FrequencyBand default_band(std::size_t segment) {
    return {4.0 / static_cast<double>(segment), 0.25};
}

SpectralMode parse_spectral_mode(const std::string& name) {
    if (name == "welch") return SpectralMode::welch;
    if (name == "variance_surrogate" || name == "surrogate") return SpectralMode::variance_surrogate;
    if (name == "off") return SpectralMode::off;
    throw std::invalid_argument("unknown spectral mode '" + name + "'");
}

const char* to_string(SpectralMode m) {
    switch (m) {
        case SpectralMode::welch: return "welch";
        case SpectralMode::variance_surrogate: return "variance_surrogate";
        case SpectralMode::off: return "off";
    }
    return "?";
}

namespace {

std::vector<double> hann(std::size_t n) {
    // periodic Hann, the usual choice for spectral averaging
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
    }
    return w;
}

std::vector<std::size_t> segment_starts(std::size_t len, std::size_t segment, double overlap) {
    if (segment < 16) throw std::invalid_argument("Welch segment must be at least 16 samples");
    if (segment > len) {
        throw std::invalid_argument("Welch segment (" + std::to_string(segment) + ") exceeds series length (" +
                                    std::to_string(len) + ")");
    }
    if (!(overlap >= 0.0 && overlap < 1.0)) throw std::invalid_argument("Welch overlap must be in [0, 1)");
    auto step = static_cast<std::size_t>(std::floor(static_cast<double>(segment) * (1.0 - overlap)));
    if (step == 0) step = 1;
    std::vector<std::size_t> starts;
    for (std::size_t s = 0; s + segment <= len; s += step) starts.push_back(s);
    return starts;
}

// Accumulates one-sided periodograms of all segments of x into `acc` (bins 1..segment/2).
// Optionally keeps the complex DFT of each segment.
struct SegmentSpectra {
    std::vector<std::size_t> starts;
    std::vector<std::vector<std::complex<double>>> dft;  // per segment, bins 0..segment/2
};

SegmentSpectra periodograms(std::span<const double> x, std::size_t segment, double overlap,
                            const std::vector<double>& window, std::vector<double>& acc, bool keep) {
    SegmentSpectra out;
    out.starts = segment_starts(x.size(), segment, overlap);
    double wss = 0.0;
    for (double w : window) wss += w * w;
    detail::FftBuffer buf(segment);
    const std::size_t half = segment / 2;
    for (std::size_t s : out.starts) {
        double m = 0.0;
        for (std::size_t n = 0; n < segment; ++n) m += x[s + n];
        m /= static_cast<double>(segment);
        for (std::size_t n = 0; n < segment; ++n) buf.set(n, window[n] * (x[s + n] - m), 0.0);
        buf.forward();
        std::vector<std::complex<double>> bins;
        if (keep) bins.resize(half + 1);
        for (std::size_t j = 1; j <= half; ++j) {
            const double p = buf.re(j) * buf.re(j) + buf.im(j) * buf.im(j);
            const double c = (j == half && segment % 2 == 0) ? 1.0 : 2.0;
            acc[j - 1] += c * p / wss;
            if (keep) bins[j] = {buf.re(j), buf.im(j)};
        }
        if (keep) out.dft.push_back(std::move(bins));
    }
    return out;
}

Psd finish_psd(std::vector<double> acc, std::size_t segment, std::size_t count) {
    Psd psd;
    psd.segment = segment;
    psd.segments_averaged = count;
    psd.f.resize(acc.size());
    psd.s.resize(acc.size());
    for (std::size_t j = 0; j < acc.size(); ++j) {
        psd.f[j] = static_cast<double>(j + 1) / static_cast<double>(segment);
        psd.s[j] = acc[j] / static_cast<double>(count);
    }
    return psd;
}

}  // namespace

Psd welch_psd(std::span<const double> x, std::size_t segment, double overlap) {
    const auto window = hann(segment);
    std::vector<double> acc(segment / 2, 0.0);
    const auto spectra = periodograms(x, segment, overlap, window, acc, false);
    return finish_psd(std::move(acc), segment, spectra.starts.size());
}

Psd welch_psd_batch(std::span<const std::vector<double>> batch, std::size_t segment, double overlap) {
    if (batch.empty()) throw std::invalid_argument("empty trajectory batch");
    const auto window = hann(segment);
    std::vector<double> acc(segment / 2, 0.0);
    std::size_t count = 0;
    for (const auto& traj : batch) {
        count += periodograms(traj, segment, overlap, window, acc, false).starts.size();
    }
    return finish_psd(std::move(acc), segment, count);
}

SlopeFit spectral_slope(const Psd& psd, FrequencyBand band) {
    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t j = 0; j < psd.f.size(); ++j) {
        if (psd.f[j] < band.lo || psd.f[j] > band.hi) continue;
        if (!(psd.s[j] > 0.0)) throw std::domain_error("non-positive spectral density inside the band");
        xs.push_back(-std::log(psd.f[j]));
        ys.push_back(std::log(psd.s[j]));
    }
    if (xs.size() < 5) {
        throw std::invalid_argument("spectral slope needs at least 5 bins in band, have " +
                                    std::to_string(xs.size()));
    }
    const auto fit = fit_line(xs, ys);
    return {fit.slope, fit.intercept, xs.size()};
}

SpectralLoss spectral_loss_welch(std::span<const std::vector<double>> batch, double h_hat,
                                 const SpectralOptions& opts) {
    if (batch.size() < 8) throw std::invalid_argument("spectral loss needs at least 8 trajectories");
    const std::size_t len = batch.front().size();
    for (const auto& t : batch) {
        if (t.size() != len) throw std::invalid_argument("trajectories must share one length");
    }
    if (len < 64) throw std::invalid_argument("spectral loss needs trajectories of length >= 64");
    const std::size_t segment = std::min(opts.segment, len);
    const FrequencyBand band = opts.band.hi > opts.band.lo ? opts.band : default_band(segment);

    const auto window = hann(segment);
    double wss = 0.0;
    for (double w : window) wss += w * w;
    std::vector<double> acc(segment / 2, 0.0);
    std::vector<SegmentSpectra> spectra;
    std::size_t count = 0;
    for (const auto& traj : batch) {
        spectra.push_back(periodograms(traj, segment, opts.overlap, window, acc, true));
        count += spectra.back().starts.size();
    }

    SpectralLoss out;
    out.mode = SpectralMode::welch;
    out.band = band;
    out.psd = finish_psd(std::move(acc), segment, count);
    const auto slope = spectral_slope(out.psd, band);
    out.beta_hat = slope.beta;
    out.beta_target = 2.0 * h_hat - 1.0;

    // band bins and their regression abscissae
    std::vector<std::size_t> bins;
    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t j = 0; j < out.psd.f.size(); ++j) {
        if (out.psd.f[j] < band.lo || out.psd.f[j] > band.hi) continue;
        bins.push_back(j + 1);
        xs.push_back(-std::log(out.psd.f[j]));
        ys.push_back(std::log(out.psd.s[j]));
    }
    const double m = static_cast<double>(bins.size());
    double xbar = 0.0;
    double ybar = 0.0;
    for (std::size_t i = 0; i < bins.size(); ++i) {
        xbar += xs[i];
        ybar += ys[i];
    }
    xbar /= m;
    ybar /= m;
    double sxx = 0.0;
    for (double x : xs) sxx += (x - xbar) * (x - xbar);

    const double dbeta = out.beta_hat - out.beta_target;
    out.slope_term = dbeta * dbeta;
    out.intercept = ybar - out.beta_target * xbar;
    std::vector<double> resid(bins.size());
    double shape = 0.0;
    for (std::size_t i = 0; i < bins.size(); ++i) {
        resid[i] = (ys[i] - ybar) - out.beta_target * (xs[i] - xbar);
        shape += resid[i] * resid[i];
    }
    out.shape_term = shape / m;
    out.value = out.slope_term + opts.lambda_shape * out.shape_term;

    // dLoss/dlogS_i, then chain through the periodogram of every segment
    std::vector<double> dlog(bins.size());
    for (std::size_t i = 0; i < bins.size(); ++i) {
        dlog[i] = 2.0 * dbeta * (xs[i] - xbar) / sxx + opts.lambda_shape * 2.0 * resid[i] / m;
    }
    std::vector<double> cos_t(bins.size() * segment);
    std::vector<double> sin_t(bins.size() * segment);
    std::vector<std::complex<double>> wdft(bins.size(), {0.0, 0.0});
    for (std::size_t i = 0; i < bins.size(); ++i) {
        for (std::size_t n = 0; n < segment; ++n) {
            const double ang = -2.0 * std::numbers::pi * static_cast<double>(bins[i] * n % segment) /
                               static_cast<double>(segment);
            cos_t[i * segment + n] = std::cos(ang);
            sin_t[i * segment + n] = std::sin(ang);
            wdft[i] += window[n] * std::complex<double>(cos_t[i * segment + n], sin_t[i * segment + n]);
        }
    }
    const double inv_count = 1.0 / static_cast<double>(count);
    const double inv_seg = 1.0 / static_cast<double>(segment);
    out.grad.assign(batch.size(), std::vector<double>(len, 0.0));
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const auto& sp = spectra[b];
        for (std::size_t si = 0; si < sp.starts.size(); ++si) {
            const std::size_t start = sp.starts[si];
            for (std::size_t i = 0; i < bins.size(); ++i) {
                const std::size_t j = bins[i];
                const double c = (j == segment / 2 && segment % 2 == 0) ? 1.0 : 2.0;
                const double s_val = out.psd.s[j - 1];
                const double coef = dlog[i] / s_val * inv_count * c / wss;
                const std::complex<double> xc = std::conj(sp.dft[si][j]);
                // d|X|^2/dy_n = 2 Re(conj(X) (w_n e_n - W / segment))
                const double mean_part = 2.0 * (xc * wdft[i]).real() * inv_seg;
                for (std::size_t n = 0; n < segment; ++n) {
                    const double re = xc.real() * cos_t[i * segment + n] - xc.imag() * sin_t[i * segment + n];
                    out.grad[b][start + n] += coef * (2.0 * window[n] * re - mean_part);
                }
            }
        }
    }
    return out;
}

SpectralLoss spectral_loss_surrogate(std::span<const double> targets) {
    if (targets.empty()) throw std::invalid_argument("variance surrogate needs a non-empty batch");
    double m = 0.0;
    for (double v : targets) m += v;
    m /= static_cast<double>(targets.size());
    double ss = 0.0;
    for (double v : targets) ss += (v - m) * (v - m);
    const double var = ss / static_cast<double>(targets.size());
    SpectralLoss out;
    out.mode = SpectralMode::variance_surrogate;
    out.value = (var - 1.0) * (var - 1.0);
    return out;
}

}  // namespace selfsim
