#include <rotordiag/audio.hpp>
#include <rotordiag/error.hpp>

#include "../byteio.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace rotordiag::audio {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

struct FmtChunk {
    std::uint16_t format_tag;
    std::uint16_t channels;
    std::uint32_t sample_rate;
    std::uint16_t bits_per_sample;
};

FmtChunk parse_fmt(std::span<const std::uint8_t> body) {
    detail::ByteReader r(body);
    if (body.size() < 16)
        fail(Errc::Malformed, "wav: fmt chunk too short");
    FmtChunk f{};
    f.format_tag = r.u16();
    f.channels = r.u16();
    f.sample_rate = r.u32();
    r.skip(4); // byte rate
    r.skip(2); // block align
    f.bits_per_sample = r.u16();
    if (f.format_tag == kFormatExtensible) {
        // cbSize, valid bits, channel mask, then the subformat GUID whose
        // first two bytes carry the real format tag
        if (body.size() < 40)
            fail(Errc::Malformed, "wav: extensible fmt chunk too short");
        r.skip(2 + 2 + 4);
        f.format_tag = r.u16();
    }
    return f;
}

} // namespace

AudioClip read_wav(const std::filesystem::path& path) {
    const auto bytes = detail::read_file(path);
    detail::ByteReader r(bytes);
    if (bytes.size() < 12)
        fail(Errc::Malformed, "wav: file too short for RIFF header: " + path.string());
    if (r.tag() != "RIFF")
        fail(Errc::Malformed, "wav: missing RIFF tag: " + path.string());
    r.u32();
    if (r.tag() != "WAVE")
        fail(Errc::Malformed, "wav: missing WAVE tag: " + path.string());

    std::optional<FmtChunk> fmt;
    std::optional<std::span<const std::uint8_t>> data;
    while (r.remaining() >= 8 && !(fmt && data)) {
        const std::string id = r.tag();
        const std::uint32_t size = r.u32();
        if (id == "data" && size > r.remaining())
            fail(Errc::Truncated, "wav: data chunk runs past end of file: " + path.string());
        if (size > r.remaining())
            fail(Errc::Malformed, "wav: chunk '" + id + "' runs past end of file");
        auto body = r.take(size);
        if (size % 2 == 1 && r.remaining() > 0)
            r.skip(1);
        if (id == "fmt ")
            fmt = parse_fmt(body);
        else if (id == "data")
            data = body;
    }
    if (!fmt)
        fail(Errc::Malformed, "wav: no fmt chunk: " + path.string());
    if (!data)
        fail(Errc::Malformed, "wav: no data chunk: " + path.string());
    if (fmt->format_tag != kFormatPcm)
        fail(Errc::Unsupported, "wav: only PCM is supported (format tag " +
                                    std::to_string(fmt->format_tag) + ")");
    if (fmt->bits_per_sample != 16)
        fail(Errc::Unsupported, "wav: only 16-bit samples are supported (got " +
                                    std::to_string(fmt->bits_per_sample) + ")");
    if (fmt->channels != 1 && fmt->channels != 2)
        fail(Errc::Unsupported, "wav: only mono or stereo is supported (got " +
                                    std::to_string(fmt->channels) + " channels)");
    if (fmt->sample_rate == 0)
        fail(Errc::Malformed, "wav: zero sample rate");

    const std::size_t frame_bytes = 2u * fmt->channels;
    const std::size_t frames = data->size() / frame_bytes;
    AudioClip clip;
    clip.sample_rate_hz = static_cast<int>(fmt->sample_rate);
    clip.samples.resize(frames);
    detail::ByteReader pcm(*data);
    for (std::size_t i = 0; i < frames; ++i) {
        if (fmt->channels == 1) {
            clip.samples[i] = pcm.i16() / 32768.0;
        } else {
            const int left = pcm.i16();
            const int right = pcm.i16();
            clip.samples[i] = (left + right) / 65536.0;
        }
    }
    return clip;
}

void write_wav(const AudioClip& clip, const std::filesystem::path& path) {
    require(clip.sample_rate_hz > 0, Errc::InvalidArgument, "wav: sample rate must be positive");
    const auto data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2);

    detail::ByteWriter w;
    w.buffer().reserve(44 + data_bytes);
    w.tag("RIFF");
    w.u32(36 + data_bytes);
    w.tag("WAVE");
    w.tag("fmt ");
    w.u32(16);
    w.u16(kFormatPcm);
    w.u16(1);
    w.u32(static_cast<std::uint32_t>(clip.sample_rate_hz));
    w.u32(static_cast<std::uint32_t>(clip.sample_rate_hz) * 2);
    w.u16(2);
    w.u16(16);
    w.tag("data");
    w.u32(data_bytes);
    for (double x : clip.samples) {
        const double q = std::nearbyint(std::clamp(x, -1.0, 1.0) * 32768.0);
        w.i16(static_cast<std::int16_t>(std::clamp(q, -32768.0, 32767.0)));
    }
    detail::write_file(path, w.buffer());
}

} // namespace rotordiag::audio
