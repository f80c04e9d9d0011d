#include <rotordiag/error.hpp>
#include <rotordiag/spectrogram.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

namespace rotordiag::spectrogram {

namespace {

using cplx = std::complex<double>;

/// Precomputed transform of one length. Power-of-two lengths use an in-place
/// iterative radix-2 FFT; anything else falls back to the O(N^2) sum.
class DftPlan {
public:
    explicit DftPlan(std::size_t n) : n_(n), pow2_(std::has_single_bit(n)) {
        twiddle_.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            const double phase = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
            twiddle_[k] = {std::cos(phase), std::sin(phase)};
        }
        if (pow2_) {
            const int bits = std::countr_zero(n);
            bitrev_.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                std::size_t r = 0;
                for (int b = 0; b < bits; ++b)
                    r |= ((i >> b) & 1u) << (bits - 1 - b);
                bitrev_[i] = r;
            }
        }
    }

    void transform(std::span<const double> frame, std::span<const double> window,
                   std::vector<cplx>& out) const {
        out.assign(n_, cplx{});
        if (pow2_) {
            for (std::size_t i = 0; i < n_; ++i)
                out[bitrev_[i]] = frame[i] * window[i];
            for (std::size_t len = 2; len <= n_; len <<= 1) {
                const std::size_t half = len / 2;
                const std::size_t stride = n_ / len;
                for (std::size_t start = 0; start < n_; start += len) {
                    for (std::size_t j = 0; j < half; ++j) {
                        const cplx u = out[start + j];
                        const cplx v = out[start + j + half] * twiddle_[j * stride];
                        out[start + j] = u + v;
                        out[start + j + half] = u - v;
                    }
                }
            }
            return;
        }
        for (std::size_t k = 0; k < n_; ++k) {
            cplx acc{};
            for (std::size_t i = 0; i < n_; ++i)
                acc += frame[i] * window[i] * twiddle_[(k * i) % n_];
            out[k] = acc;
        }
    }

private:
    std::size_t n_;
    bool pow2_;
    std::vector<cplx> twiddle_;
    std::vector<std::size_t> bitrev_;
};

} // namespace

void SpectrogramParams::validate() const {
    require(window_len >= 2, Errc::InvalidArgument, "stft: window length must be >= 2");
    require(hop >= 1 && hop <= window_len, Errc::InvalidArgument,
            "stft: hop must lie in [1, window length]");
}

std::vector<double> hann_window(int n) {
    require(n >= 2, Errc::InvalidArgument, "hann_window: N must be >= 2");
    std::vector<double> w(static_cast<std::size_t>(n));
    const double denom = n - 1;
    for (int i = 0; i < n; ++i)
        w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / denom));
    // exact zeros at the ends; cos(2 pi) is not exactly 1 in floating point
    w.front() = 0.0;
    w.back() = 0.0;
    return w;
}

std::size_t frame_count(std::size_t num_samples, const SpectrogramParams& params) {
    params.validate();
    const auto n = static_cast<std::size_t>(params.window_len);
    if (num_samples < n)
        return 0;
    return (num_samples - n) / static_cast<std::size_t>(params.hop) + 1;
}

std::vector<std::complex<double>> windowed_dft(std::span<const double> frame,
                                               std::span<const double> window) {
    require(frame.size() == window.size() && !frame.empty(), Errc::ShapeMismatch,
            "windowed_dft: frame and window lengths differ");
    std::vector<cplx> out;
    DftPlan(frame.size()).transform(frame, window, out);
    return out;
}

Spectrogram stft(const audio::AudioClip& clip, const SpectrogramParams& params) {
    params.validate();
    const auto n = static_cast<std::size_t>(params.window_len);
    require(clip.samples.size() >= n, Errc::InvalidArgument,
            "stft: clip has " + std::to_string(clip.samples.size()) +
                " samples, shorter than one window of " + std::to_string(n));

    const std::size_t frames = frame_count(clip.samples.size(), params);
    const std::size_t bins = n / 2 + 1;
    const auto window = hann_window(params.window_len);
    const DftPlan plan(n);

    Spectrogram spec;
    spec.params = params;
    spec.sample_rate_hz = clip.sample_rate_hz;
    spec.magnitudes = Matrix(frames, bins);
    std::vector<cplx> buf;
    const std::span<const double> samples(clip.samples);
    for (std::size_t t = 0; t < frames; ++t) {
        plan.transform(samples.subspan(t * static_cast<std::size_t>(params.hop), n), window, buf);
        for (std::size_t k = 0; k < bins; ++k)
            spec.magnitudes(t, k) = std::abs(buf[k]);
    }
    return spec;
}

Matrix log_power(const Spectrogram& spec, double floor_db) {
    require(floor_db < 0.0, Errc::InvalidArgument, "log_power: floor_db must be negative");
    Matrix out(spec.magnitudes.rows, spec.magnitudes.cols);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = std::max(floor_db, 20.0 * std::log10(spec.magnitudes.data[i] + kLogEpsilon));
    return out;
}

Matrix crop_frequency(const Matrix& levels, const Spectrogram& spec, double max_hz) {
    if (max_hz <= 0.0)
        return levels;
    std::size_t keep = 0;
    while (keep < levels.cols && spec.bin_hz(keep) <= max_hz)
        ++keep;
    require(keep >= 2, Errc::InvalidArgument, "crop_frequency: fewer than two bins below the cut-off");
    Matrix out(levels.rows, keep);
    for (std::size_t r = 0; r < levels.rows; ++r)
        std::copy_n(levels.data.begin() + static_cast<std::ptrdiff_t>(r * levels.cols), keep,
                    out.data.begin() + static_cast<std::ptrdiff_t>(r * keep));
    return out;
}

} // namespace rotordiag::spectrogram
