#include <rotordiag/audio.hpp>
#include <rotordiag/error.hpp>
#include <rotordiag/rng.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace rotordiag::audio {

void RotorSynthSpec::validate() const {
    require(shaft_rate_hz > 0.0 && std::isfinite(shaft_rate_hz), Errc::InvalidArgument,
            "synth: shaft_rate_hz must be positive");
    require(blade_count >= 2, Errc::InvalidArgument, "synth: blade_count must be >= 2");
    for (double a : harmonic_amplitudes)
        require(a >= 0.0 && std::isfinite(a), Errc::InvalidArgument,
                "synth: harmonic amplitudes must be non-negative");
    require(imbalance_depth >= 0.0 && imbalance_depth <= 1.0, Errc::InvalidArgument,
            "synth: imbalance_depth must lie in [0, 1]");
    require(subharmonic_gain >= 0.0 && std::isfinite(subharmonic_gain), Errc::InvalidArgument,
            "synth: subharmonic_gain must be non-negative");
    require(noise_level >= 0.0 && std::isfinite(noise_level), Errc::InvalidArgument,
            "synth: noise_level must be non-negative");
}

AudioClip synth_rotor_audio(const RotorSynthSpec& spec, double duration_s, int sample_rate_hz) {
    spec.validate();
    require(duration_s > 0.0 && std::isfinite(duration_s), Errc::InvalidArgument,
            "synth: duration must be positive");
    require(sample_rate_hz > 0, Errc::InvalidArgument, "synth: sample rate must be positive");
    const double nyquist = sample_rate_hz / 2.0;
    const double top_harmonic =
        spec.blade_pass_hz() * static_cast<double>(std::max<std::size_t>(1, spec.harmonic_amplitudes.size()));
    require(top_harmonic < nyquist && spec.shaft_rate_hz < nyquist, Errc::InvalidArgument,
            "synth: harmonic at " + std::to_string(top_harmonic) + " Hz aliases at " +
                std::to_string(sample_rate_hz) + " Hz sampling");

    const auto n = static_cast<std::size_t>(std::floor(duration_s * sample_rate_hz));
    AudioClip clip;
    clip.sample_rate_hz = sample_rate_hz;
    clip.samples.resize(n);

    constexpr double two_pi = 2.0 * std::numbers::pi;
    const double bp = spec.blade_pass_hz();
    Rng noise(spec.seed);
    double peak = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / sample_rate_hz;
        double tonal = 0.0;
        for (std::size_t k = 0; k < spec.harmonic_amplitudes.size(); ++k)
            if (spec.harmonic_amplitudes[k] != 0.0)
                tonal += spec.harmonic_amplitudes[k] * std::sin(two_pi * (k + 1) * bp * t);
        const double shaft = std::sin(two_pi * spec.shaft_rate_hz * t);
        double x = tonal * (1.0 + spec.imbalance_depth * shaft) + spec.subharmonic_gain * shaft;
        if (spec.noise_level > 0.0)
            x += spec.noise_level * noise.gaussian();
        clip.samples[i] = x;
        peak = std::max(peak, std::abs(x));
    }
    if (peak > kPeakLimit) {
        const double scale = kPeakLimit / peak;
        for (double& x : clip.samples)
            x *= scale;
    }
    return clip;
}

std::vector<AudioClip> segment_clip(const AudioClip& clip, double segment_s) {
    require(segment_s > 0.0 && std::isfinite(segment_s), Errc::InvalidArgument,
            "segment: segment length must be positive");
    const auto len = static_cast<std::size_t>(std::floor(segment_s * clip.sample_rate_hz));
    std::vector<AudioClip> out;
    if (len == 0)
        return out;
    const std::size_t count = clip.samples.size() / len;
    out.reserve(count);
    for (std::size_t s = 0; s < count; ++s) {
        auto first = clip.samples.begin() + static_cast<std::ptrdiff_t>(s * len);
        out.push_back(AudioClip{{first, first + static_cast<std::ptrdiff_t>(len)}, clip.sample_rate_hz});
    }
    return out;
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

double parse_real(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used == value.size())
            return v;
    } catch (const std::exception&) {
    }
    fail(Errc::Malformed, "preset: bad value for " + key + ": '" + value + "'");
}

template <class Int>
Int parse_int(const std::string& key, const std::string& value) {
    Int v{};
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || ptr != value.data() + value.size())
        fail(Errc::Malformed, "preset: bad integer for " + key + ": '" + value + "'");
    return v;
}

} // namespace

RotorSynthSpec parse_synth_spec(const std::string& text) {
    RotorSynthSpec spec;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#')
            continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            fail(Errc::Malformed, "preset: line " + std::to_string(lineno) + " has no '='");
        const std::string key = trim(std::string_view(t).substr(0, eq));
        const std::string value = trim(std::string_view(t).substr(eq + 1));
        if (key == "shaft_rate_hz") {
            spec.shaft_rate_hz = parse_real(key, value);
        } else if (key == "blade_count") {
            spec.blade_count = parse_int<int>(key, value);
        } else if (key == "harmonics") {
            spec.harmonic_amplitudes.clear();
            std::istringstream items(value);
            std::string item;
            while (std::getline(items, item, ','))
                spec.harmonic_amplitudes.push_back(parse_real(key, trim(item)));
        } else if (key == "imbalance_depth") {
            spec.imbalance_depth = parse_real(key, value);
        } else if (key == "subharmonic_gain") {
            spec.subharmonic_gain = parse_real(key, value);
        } else if (key == "noise_level") {
            spec.noise_level = parse_real(key, value);
        } else if (key == "seed") {
            spec.seed = parse_int<std::uint64_t>(key, value);
        } else {
            fail(Errc::Malformed, "preset: unknown key '" + key + "'");
        }
    }
    spec.validate();
    return spec;
}

RotorSynthSpec read_synth_spec(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec))
        fail(Errc::FileNotFound, "no such preset file: " + path.string());
    std::ifstream in(path);
    if (!in)
        fail(Errc::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_synth_spec(ss.str());
}

std::string format_synth_spec(const RotorSynthSpec& spec) {
    std::ostringstream out;
    out.precision(17);
    out << "shaft_rate_hz=" << spec.shaft_rate_hz << '\n'
        << "blade_count=" << spec.blade_count << '\n'
        << "harmonics=";
    for (std::size_t i = 0; i < spec.harmonic_amplitudes.size(); ++i)
        out << (i ? "," : "") << spec.harmonic_amplitudes[i];
    out << '\n'
        << "imbalance_depth=" << spec.imbalance_depth << '\n'
        << "subharmonic_gain=" << spec.subharmonic_gain << '\n'
        << "noise_level=" << spec.noise_level << '\n'
        << "seed=" << spec.seed << '\n';
    return out.str();
}

} // namespace rotordiag::audio
