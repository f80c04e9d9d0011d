#include <rotordiag/error.hpp>
#include <rotordiag/pipeline.hpp>
#include <rotordiag/rng.hpp>

#include <cstdio>

namespace rotordiag::pipeline {

namespace {

std::uint64_t name_hash(const std::string& s) {
    std::uint64_t h = 0xCBF29CE484222325ULL; // FNV-1a
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

} // namespace

// Two airframes with different shaft rates, blade counts, harmonic profiles
// and noise floors. quadB is the noisier frame with subtler damage lines.
QuadrotorPreset quadrotor_preset(const std::string& name) {
    QuadrotorPreset p;
    p.name = name;
    if (name == "quadA") {
        p.base.shaft_rate_hz = 55.0;
        p.base.blade_count = 2;
        p.base.harmonic_amplitudes = {1.0, 0.6, 0.45, 0.3, 0.2, 0.15};
        p.base.noise_level = 0.02;
        p.config2 = {{0.35, 0.6}, {0.25, 0.45}};
        p.config3 = {{0.2, 0.4}, {0.15, 0.3}};
    } else if (name == "quadB") {
        p.base.shaft_rate_hz = 85.0;
        p.base.blade_count = 3;
        p.base.harmonic_amplitudes = {1.0, 0.5, 0.3, 0.2};
        p.base.noise_level = 0.06;
        p.config2 = {{0.2, 0.45}, {0.12, 0.3}};
        p.config3 = {{0.08, 0.25}, {0.05, 0.15}};
    } else {
        fail(Errc::InvalidArgument, "unknown preset '" + name + "' (expected quadA or quadB)");
    }
    return p;
}

std::vector<std::string> preset_names() { return {"quadA", "quadB"}; }

audio::RotorSynthSpec sample_synth_spec(const QuadrotorPreset& preset, PropellerSet config, Thrust thrust,
                                        std::uint64_t seed) {
    Rng rng(seed);
    audio::RotorSynthSpec s = preset.base;
    s.shaft_rate_hz *= thrust_multiplier(thrust) * (1.0 + rng.uniform(-preset.shaft_jitter, preset.shaft_jitter));
    for (double& a : s.harmonic_amplitudes)
        a *= 1.0 + rng.uniform(-preset.amplitude_jitter, preset.amplitude_jitter);
    s.noise_level *= 1.0 + rng.uniform(-preset.noise_jitter, preset.noise_jitter);
    s.imbalance_depth = 0.0;
    s.subharmonic_gain = 0.0;
    if (config != PropellerSet::Config1) {
        const DamageProfile& d = config == PropellerSet::Config2 ? preset.config2 : preset.config3;
        s.imbalance_depth = rng.uniform(d.imbalance_depth[0], d.imbalance_depth[1]);
        s.subharmonic_gain = rng.uniform(d.subharmonic_gain[0], d.subharmonic_gain[1]);
    }
    s.seed = rng.next_u64();
    return s;
}

DatasetManifest build_synthetic_dataset(const QuadrotorPreset& preset, const DatasetOptions& options,
                                        const std::filesystem::path& out_dir) {
    require(options.per_class >= 10, Errc::InvalidArgument, "dataset: per_class must be >= 10");
    options.image.validate();

    std::error_code ec;
    for (const char* sub : {"unbroken", "broken"}) {
        std::filesystem::create_directories(out_dir / sub, ec);
        if (ec)
            fail(Errc::Io, "cannot create " + (out_dir / sub).string() + ": " + ec.message());
    }

    const std::uint64_t base_seed = derive_seed(options.seed, name_hash(preset.name));
    DatasetManifest manifest;
    manifest.root = out_dir;
    for (Label label : {Label::Unbroken, Label::Broken}) {
        for (int i = 0; i < options.per_class; ++i) {
            SampleRecord r;
            r.label = label;
            r.quadrotor = preset.name;
            r.thrust = static_cast<Thrust>(i % 3);
            r.propeller_set = label == Label::Unbroken ? PropellerSet::Config1
                              : (i % 2 == 0)           ? PropellerSet::Config2
                                                       : PropellerSet::Config3;
            char name[96];
            std::snprintf(name, sizeof name, "%s/%s_%s_%03d.ppm", to_string(label).c_str(), preset.name.c_str(),
                          to_string(label).c_str(), i);
            r.image_path = name;

            const std::uint64_t seed = derive_seed(base_seed, class_index(label) * 1'000'000u + i);
            const auto spec = sample_synth_spec(preset, r.propeller_set, r.thrust, seed);
            const auto clip = audio::synth_rotor_audio(spec, options.duration_s, options.sample_rate_hz);
            spectrogram::write_image(spectrogram::render(clip, options.image), manifest.resolve(r));
            manifest.records.push_back(std::move(r));
        }
    }
    write_manifest(manifest, out_dir / "manifest.csv");
    return manifest;
}

} // namespace rotordiag::pipeline
