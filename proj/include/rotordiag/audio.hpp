#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace rotordiag::audio {

inline constexpr int kDefaultSampleRate = 44100;
inline constexpr double kDefaultSegmentSeconds = 6.0;

/// Mono PCM signal with nominal amplitude range [-1, 1].
struct AudioClip {
    std::vector<double> samples;
    int sample_rate_hz = kDefaultSampleRate;

    double duration_s() const noexcept {
        return static_cast<double>(samples.size()) / sample_rate_hz;
    }
};

/// Reads a RIFF/WAVE file holding 16-bit PCM, mono or stereo. Stereo frames
/// are averaged; integers are scaled by 1/32768.
AudioClip read_wav(const std::filesystem::path& path);

/// Writes 16-bit PCM mono. Amplitudes are clamped to [-1, 1] and rounded to
/// the nearest step; +1 saturates at 32767.
void write_wav(const AudioClip& clip, const std::filesystem::path& path);

/// Parameters of the harmonic rotor model. A spec is healthy iff both
/// imbalance_depth and subharmonic_gain are zero.
struct RotorSynthSpec {
    double shaft_rate_hz = 55.0;
    int blade_count = 2;
    std::vector<double> harmonic_amplitudes{1.0};
    double imbalance_depth = 0.0;
    double subharmonic_gain = 0.0;
    double noise_level = 0.0;
    std::uint64_t seed = 0;

    double blade_pass_hz() const noexcept { return shaft_rate_hz * blade_count; }
    bool healthy() const noexcept { return imbalance_depth == 0.0 && subharmonic_gain == 0.0; }
    void validate() const;
};

inline constexpr double kPeakLimit = 0.99;

/// Synthesizes
///   sum_k a_k sin(2 pi (k+1) f_bp t) * (1 + d sin(2 pi f_s t))
///     + g sin(2 pi f_s t) + sigma * noise(t)
/// and scales the result down if its peak exceeds kPeakLimit.
/// Every harmonic must stay below Nyquist.
AudioClip synth_rotor_audio(const RotorSynthSpec& spec, double duration_s,
                            int sample_rate_hz = kDefaultSampleRate);

/// Consecutive non-overlapping segments of floor(segment_s * rate) samples.
/// The trailing remainder is dropped; a clip shorter than one segment gives
/// an empty result.
std::vector<AudioClip> segment_clip(const AudioClip& clip, double segment_s);

// Preset files are plain key=value lines. `harmonics` is comma-separated;
// blank lines and lines starting with '#' are ignored.
RotorSynthSpec parse_synth_spec(const std::string& text);
RotorSynthSpec read_synth_spec(const std::filesystem::path& path);
std::string format_synth_spec(const RotorSynthSpec& spec);

} // namespace rotordiag::audio
