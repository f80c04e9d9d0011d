#pragma once

#include <rotordiag/audio.hpp>

#include <array>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace rotordiag::spectrogram {

/// Dense row-major matrix of reals; rows are time frames, columns are bins.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

enum class WindowKind { Hann };

struct SpectrogramParams {
    int window_len = 1024; // N
    int hop = 512;         // h
    WindowKind window = WindowKind::Hann;

    void validate() const;
};

struct Spectrogram {
    Matrix magnitudes; // [frames x (window_len/2 + 1)]
    SpectrogramParams params;
    int sample_rate_hz = audio::kDefaultSampleRate;

    std::size_t frames() const noexcept { return magnitudes.rows; }
    std::size_t bins() const noexcept { return magnitudes.cols; }
    double bin_hz(std::size_t k) const noexcept {
        return static_cast<double>(k) * sample_rate_hz / params.window_len;
    }
};

/// Symmetric Hann window, W(n) = 0.5 (1 - cos(2 pi n / (N - 1))).
std::vector<double> hann_window(int n);

/// Number of frames for a signal of `num_samples`: floor((L - N) / h) + 1.
std::size_t frame_count(std::size_t num_samples, const SpectrogramParams& params);

/// All N bins of the DFT of `frame` multiplied by `window`. Radix-2 FFT when
/// N is a power of two, direct summation otherwise.
std::vector<std::complex<double>> windowed_dft(std::span<const double> frame,
                                               std::span<const double> window);

/// Short-time magnitude spectrum,
///   X(t, k) = | sum_n W(n) x(n + t h) exp(-2 pi i k n / N) |,  k = 0..N/2.
Spectrogram stft(const audio::AudioClip& clip, const SpectrogramParams& params);

inline constexpr double kLogEpsilon = 1e-10;

/// 20 log10(|X| + 1e-10), clamped below at floor_db (< 0).
Matrix log_power(const Spectrogram& spec, double floor_db);

/// Keeps only the bins at or below max_hz. max_hz <= 0 keeps everything.
Matrix crop_frequency(const Matrix& levels, const Spectrogram& spec, double max_hz);

/// 8-bit RGB image stored row-major, interleaved (the PPM layout).
struct SpecImage {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> pixels;

    SpecImage() = default;
    SpecImage(int h, int w) : height(h), width(w), pixels(static_cast<std::size_t>(h) * w * 3, 0) {}

    std::uint8_t* at(int y, int x) noexcept {
        return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
    }
    const std::uint8_t* at(int y, int x) const noexcept {
        return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
    }
    bool operator==(const SpecImage&) const = default;
};

using Rgb = std::array<std::uint8_t, 3>;

/// 256-entry colormap. On disk: 768 bytes, entry 0 first, each entry R, G, B.
struct ColorTable {
    std::array<Rgb, 256> entries{};

    static ColorTable load(const std::filesystem::path& path);
    static ColorTable from_bytes(std::span<const std::uint8_t> bytes);
    void save(const std::filesystem::path& path) const;

    /// The blue -> cyan -> yellow -> red table from data/colormap.rgb,
    /// compiled into the library.
    static const ColorTable& builtin();

    const Rgb& operator[](std::size_t i) const noexcept { return entries[i]; }
};

/// Color-table index of every output pixel, before the table lookup.
/// Levels are min-max normalized over the whole matrix (constant input maps
/// to 0) and nearest-neighbor resampled: time runs left to right, frequency
/// bottom to top.
std::vector<std::uint8_t> colorize_indices(const Matrix& levels, int height, int width);

SpecImage colorize(const Matrix& levels, int height, int width,
                   const ColorTable& table = ColorTable::builtin());

/// Binary PPM (P6, maxval 255).
void write_image(const SpecImage& img, const std::filesystem::path& path);
SpecImage read_image(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_ppm(const SpecImage& img);
SpecImage decode_ppm(std::span<const std::uint8_t> bytes);

/// Everything needed to turn a clip into a CNN input image.
struct ImageConfig {
    SpectrogramParams stft{};
    double floor_db = -100.0;
    double max_freq_hz = 2000.0; // <= 0 keeps the full band
    int height = 64;
    int width = 64;

    void validate() const;
};

/// stft -> log_power -> crop_frequency -> colorize.
SpecImage render(const audio::AudioClip& clip, const ImageConfig& config,
                 const ColorTable& table = ColorTable::builtin());

} // namespace rotordiag::spectrogram
