#include <rotordiag/error.hpp>
#include <rotordiag/spectrogram.hpp>

#include "../byteio.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

namespace rotordiag::spectrogram {

// generated from data/colormap.rgb at configure time
extern const std::uint8_t kBuiltinColormap[768];

ColorTable ColorTable::from_bytes(std::span<const std::uint8_t> bytes) {
    if (bytes.size() != 768)
        fail(Errc::Malformed, "color table must be exactly 768 bytes, got " + std::to_string(bytes.size()));
    ColorTable t;
    for (std::size_t i = 0; i < 256; ++i)
        t.entries[i] = {bytes[3 * i], bytes[3 * i + 1], bytes[3 * i + 2]};
    return t;
}

ColorTable ColorTable::load(const std::filesystem::path& path) {
    return from_bytes(detail::read_file(path));
}

void ColorTable::save(const std::filesystem::path& path) const {
    std::vector<std::uint8_t> bytes;
    bytes.reserve(768);
    for (const auto& e : entries)
        bytes.insert(bytes.end(), e.begin(), e.end());
    detail::write_file(path, bytes);
}

const ColorTable& ColorTable::builtin() {
    static const ColorTable table = from_bytes(std::span<const std::uint8_t>(kBuiltinColormap, 768));
    return table;
}

std::vector<std::uint8_t> colorize_indices(const Matrix& levels, int height, int width) {
    require(height >= 8 && width >= 8, Errc::InvalidArgument, "colorize: image must be at least 8x8");
    require(levels.rows > 0 && levels.cols > 0, Errc::InvalidArgument, "colorize: empty level matrix");

    const auto [lo_it, hi_it] = std::minmax_element(levels.data.begin(), levels.data.end());
    const double lo = *lo_it;
    const double span = *hi_it - lo;

    const auto h = static_cast<std::size_t>(height);
    const auto w = static_cast<std::size_t>(width);
    std::vector<std::uint8_t> idx(h * w);
    for (std::size_t y = 0; y < h; ++y) {
        // row 0 is the top of the image, i.e. the highest frequency
        const std::size_t from_bottom = h - 1 - y;
        const std::size_t bin = ((2 * from_bottom + 1) * levels.cols) / (2 * h);
        for (std::size_t x = 0; x < w; ++x) {
            const std::size_t frame = ((2 * x + 1) * levels.rows) / (2 * w);
            double v = span > 0.0 ? (levels(frame, bin) - lo) / span : 0.0;
            v = std::clamp(v, 0.0, 1.0);
            idx[y * w + x] = static_cast<std::uint8_t>(std::lround(v * 255.0));
        }
    }
    return idx;
}

SpecImage colorize(const Matrix& levels, int height, int width, const ColorTable& table) {
    const auto idx = colorize_indices(levels, height, width);
    SpecImage img(height, width);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const Rgb& c = table[idx[i]];
        std::copy(c.begin(), c.end(), img.pixels.begin() + static_cast<std::ptrdiff_t>(3 * i));
    }
    return img;
}

std::vector<std::uint8_t> encode_ppm(const SpecImage& img) {
    require(img.height > 0 && img.width > 0 &&
                img.pixels.size() == static_cast<std::size_t>(img.height) * img.width * 3,
            Errc::ShapeMismatch, "ppm: pixel buffer does not match dimensions");
    const std::string header =
        "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.pixels.begin(), img.pixels.end());
    return out;
}

namespace {

class HeaderParser {
public:
    explicit HeaderParser(std::span<const std::uint8_t> b) : b_(b) {}

    void skip_space_and_comments() {
        while (pos_ < b_.size()) {
            if (b_[pos_] == '#') {
                while (pos_ < b_.size() && b_[pos_] != '\n')
                    ++pos_;
            } else if (std::isspace(b_[pos_])) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    long number(const char* what) {
        skip_space_and_comments();
        long v = 0;
        std::size_t digits = 0;
        while (pos_ < b_.size() && std::isdigit(b_[pos_])) {
            v = v * 10 + (b_[pos_++] - '0');
            if (++digits > 9)
                fail(Errc::Malformed, std::string("ppm: ") + what + " too large");
        }
        if (digits == 0)
            fail(pos_ >= b_.size() ? Errc::Truncated : Errc::Malformed,
                 std::string("ppm: expected ") + what);
        return v;
    }

    std::size_t pos_ = 0;
    std::span<const std::uint8_t> b_;
};

} // namespace

SpecImage decode_ppm(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6')
        fail(Errc::Malformed, "ppm: missing P6 magic");
    HeaderParser p(bytes);
    p.pos_ = 2;
    const long width = p.number("width");
    const long height = p.number("height");
    const long maxval = p.number("maxval");
    if (width <= 0 || height <= 0)
        fail(Errc::Malformed, "ppm: non-positive dimensions");
    if (maxval != 255)
        fail(Errc::Unsupported, "ppm: only maxval 255 is supported (got " + std::to_string(maxval) + ")");
    if (p.pos_ >= bytes.size())
        fail(Errc::Truncated, "ppm: no pixel data");
    if (!std::isspace(bytes[p.pos_]))
        fail(Errc::Malformed, "ppm: expected whitespace after maxval");
    ++p.pos_;

    SpecImage img(static_cast<int>(height), static_cast<int>(width));
    if (bytes.size() - p.pos_ < img.pixels.size())
        fail(Errc::Truncated, "ppm: pixel data truncated");
    std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(p.pos_), img.pixels.size(), img.pixels.begin());
    return img;
}

void write_image(const SpecImage& img, const std::filesystem::path& path) {
    detail::write_file(path, encode_ppm(img));
}

SpecImage read_image(const std::filesystem::path& path) {
    return decode_ppm(detail::read_file(path));
}

void ImageConfig::validate() const {
    stft.validate();
    require(floor_db < 0.0, Errc::InvalidArgument, "image: floor_db must be negative");
    require(height >= 8 && width >= 8, Errc::InvalidArgument, "image: size must be at least 8x8");
}

SpecImage render(const audio::AudioClip& clip, const ImageConfig& config, const ColorTable& table) {
    config.validate();
    const Spectrogram spec = stft(clip, config.stft);
    const Matrix levels = crop_frequency(log_power(spec, config.floor_db), spec, config.max_freq_hz);
    return colorize(levels, config.height, config.width, table);
}

} // namespace rotordiag::spectrogram
