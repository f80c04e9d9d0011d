// rotordiag: command-line front end for dataset synthesis, spectrogram
// rendering, training, evaluation, transfer and gradient checking.
//
// Exit codes: 0 ok, 1 check failed or internal error, 2 invalid arguments,
// 3 I/O or file format error, 4 training diverged.

#include <rotordiag/audio.hpp>
#include <rotordiag/error.hpp>
#include <rotordiag/nn/checkpoint.hpp>
#include <rotordiag/nn/gradcheck.hpp>
#include <rotordiag/pipeline.hpp>
#include <rotordiag/rng.hpp>
#include <rotordiag/spectrogram.hpp>

#include <CLI11.hpp>

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace rotordiag;

namespace {

enum Exit : int { kOk = 0, kCheckFailed = 1, kUsage = 2, kIo = 3, kDiverged = 4 };

int exit_code(Errc code) {
    switch (code) {
    case Errc::InvalidArgument:
    case Errc::ShapeMismatch:
    case Errc::InsufficientSamples:
        return kUsage;
    case Errc::FileNotFound:
    case Errc::Io:
    case Errc::Malformed:
    case Errc::Unsupported:
    case Errc::Truncated:
    case Errc::BadMagic:
    case Errc::VersionMismatch:
        return kIo;
    case Errc::Divergence:
        return kDiverged;
    }
    return kCheckFailed;
}

struct Globals {
    std::optional<std::uint64_t> seed;
    bool quiet = false;
    std::string output_dir = ".";

    fs::path path(const std::string& p) const {
        const fs::path q(p);
        return q.is_absolute() ? q : fs::path(output_dir) / q;
    }
    std::uint64_t seed_or(std::uint64_t fallback) const { return seed.value_or(fallback); }
};

// --seed wins over ROTORDIAG_SEED.
void apply_env_seed(Globals& g) {
    if (g.seed)
        return;
    const char* env = std::getenv("ROTORDIAG_SEED");
    if (!env || !*env)
        return;
    std::uint64_t v = 0;
    const char* end = env + std::char_traits<char>::length(env);
    const auto [ptr, ec] = std::from_chars(env, end, v);
    require(ec == std::errc() && ptr == end, Errc::InvalidArgument,
            std::string("ROTORDIAG_SEED is not an unsigned integer: '") + env + "'");
    g.seed = v;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        fail(Errc::Io, "cannot write " + path.string());
    out << text;
    if (!out)
        fail(Errc::Io, "write failed on " + path.string());
}

void write_reports(const Globals& g, const std::string& stem, const pipeline::TrainReport& report) {
    write_text(g.path(stem + ".txt"), pipeline::format_report(report));
    write_text(g.path(stem + ".csv"), pipeline::format_epoch_csv(report));
}

void ensure_parent(const fs::path& p) {
    if (!p.has_parent_path())
        return;
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
    if (ec)
        fail(Errc::Io, "cannot create " + p.parent_path().string() + ": " + ec.message());
}

struct ImageFlags {
    int window = spectrogram::SpectrogramParams{}.window_len;
    int hop = spectrogram::SpectrogramParams{}.hop;
    double max_freq = spectrogram::ImageConfig{}.max_freq_hz;
    double floor_db = spectrogram::ImageConfig{}.floor_db;
    int height = spectrogram::ImageConfig{}.height;
    int width = spectrogram::ImageConfig{}.width;

    void add(CLI::App* cmd) {
        cmd->add_option("--N,--window", window, "STFT window length in samples")->capture_default_str();
        cmd->add_option("--hop", hop, "STFT hop in samples")->capture_default_str();
        cmd->add_option("--max-freq", max_freq, "highest frequency kept in the image (Hz, <= 0 keeps all)")
            ->capture_default_str();
        cmd->add_option("--floor-db", floor_db, "level floor in dB")->capture_default_str();
        cmd->add_option("--height", height, "image height in pixels")->capture_default_str();
        cmd->add_option("--width", width, "image width in pixels")->capture_default_str();
    }

    spectrogram::ImageConfig config() const {
        spectrogram::ImageConfig c;
        c.stft.window_len = window;
        c.stft.hop = hop;
        c.max_freq_hz = max_freq;
        c.floor_db = floor_db;
        c.height = height;
        c.width = width;
        c.validate();
        return c;
    }
};

// ---- synth -----------------------------------------------------------------

struct SynthArgs {
    std::string preset = "quadA";
    int per_class = pipeline::DatasetOptions{}.per_class;
    std::string out;
    double duration = audio::kDefaultSegmentSeconds;
    ImageFlags image;
};

int run_synth(const Globals& g, const SynthArgs& a) {
    require(a.per_class >= 10, Errc::InvalidArgument, "--per-class must be >= 10");
    require(a.duration > 0.0, Errc::InvalidArgument, "--duration must be positive");
    pipeline::DatasetOptions opt;
    opt.per_class = a.per_class;
    opt.seed = g.seed_or(opt.seed);
    opt.duration_s = a.duration;
    opt.image = a.image.config();
    const auto preset = pipeline::quadrotor_preset(a.preset);
    const fs::path dir = g.path(a.out.empty() ? a.preset : a.out);
    const auto m = pipeline::build_synthetic_dataset(preset, opt, dir);
    if (!g.quiet)
        std::cout << "manifest: " << (dir / "manifest.csv").string() << "\nrecords: " << m.records.size()
                  << " (unbroken " << m.indices_of(pipeline::Label::Unbroken).size() << ", broken "
                  << m.indices_of(pipeline::Label::Broken).size() << ")\n";
    return kOk;
}

// ---- wav -------------------------------------------------------------------

struct WavArgs {
    std::string spec_file;
    std::string preset = "quadA";
    std::string config = "config1";
    std::string thrust = "medium";
    double duration = audio::kDefaultSegmentSeconds;
    int rate = audio::kDefaultSampleRate;
    std::string out = "rotor.wav";
};

int run_wav(const Globals& g, const WavArgs& a) {
    require(a.duration > 0.0, Errc::InvalidArgument, "--duration must be positive");
    require(a.rate > 0, Errc::InvalidArgument, "--rate must be positive");
    audio::RotorSynthSpec spec;
    if (!a.spec_file.empty()) {
        spec = audio::read_synth_spec(g.path(a.spec_file));
        if (g.seed)
            spec.seed = *g.seed;
    } else {
        spec = pipeline::sample_synth_spec(pipeline::quadrotor_preset(a.preset),
                                           pipeline::parse_propeller_set(a.config),
                                           pipeline::parse_thrust(a.thrust), g.seed_or(0));
    }
    const auto clip = audio::synth_rotor_audio(spec, a.duration, a.rate);
    const fs::path out = g.path(a.out);
    ensure_parent(out);
    audio::write_wav(clip, out);
    if (!g.quiet)
        std::cout << "wrote " << out.string() << " (" << clip.samples.size() << " samples, "
                  << clip.sample_rate_hz << " Hz)\n";
    return kOk;
}

// ---- spectrogram -----------------------------------------------------------

struct SpecArgs {
    std::string wav;
    std::string out = "spectrogram.ppm";
    std::string colormap;
    int segment = -1;
    double segment_seconds = audio::kDefaultSegmentSeconds;
    ImageFlags image;
};

int run_spectrogram(const Globals& g, const SpecArgs& a) {
    // Validate every numeric flag before touching the audio file.
    const auto config = a.image.config();
    require(a.segment_seconds > 0.0, Errc::InvalidArgument, "--segment-seconds must be positive");
    const auto table = a.colormap.empty() ? spectrogram::ColorTable::builtin()
                                          : spectrogram::ColorTable::load(g.path(a.colormap));

    audio::AudioClip clip = audio::read_wav(g.path(a.wav));
    if (a.segment >= 0) {
        auto segs = audio::segment_clip(clip, a.segment_seconds);
        require(static_cast<std::size_t>(a.segment) < segs.size(), Errc::InvalidArgument,
                "--segment " + std::to_string(a.segment) + " out of range: clip has " +
                    std::to_string(segs.size()) + " segment(s)");
        clip = std::move(segs[static_cast<std::size_t>(a.segment)]);
    }
    require(clip.samples.size() >= static_cast<std::size_t>(config.stft.window_len), Errc::InvalidArgument,
            "clip has " + std::to_string(clip.samples.size()) + " samples, shorter than one window");
    const auto img = spectrogram::render(clip, config, table);
    const fs::path out = g.path(a.out);
    ensure_parent(out);
    spectrogram::write_image(img, out);
    if (!g.quiet)
        std::cout << "wrote " << out.string() << " (" << img.width << "x" << img.height << ")\n";
    return kOk;
}

// ---- train / eval / transfer -----------------------------------------------

struct SplitFlags {
    int train_per_class = 50;
    int val_per_class = 15;
};

struct TrainArgs {
    std::string manifest;
    std::string checkpoint = "model.rdg";
    std::string report = "train_report";
    SplitFlags split;
    pipeline::TrainConfig config;
};

void check_train_config(const pipeline::TrainConfig& c) {
    c.validate();
}

int run_train(const Globals& g, TrainArgs a) {
    require(a.split.train_per_class >= 1 && a.split.val_per_class >= 0, Errc::InvalidArgument,
            "--train-per-class must be >= 1 and --val-per-class >= 0");
    a.config.seed = g.seed_or(a.config.seed);
    check_train_config(a.config);

    const auto manifest = pipeline::read_manifest(g.path(a.manifest));
    const auto plan = pipeline::split(manifest, a.config.seed, a.split.train_per_class, a.split.val_per_class);
    const auto data = pipeline::load_dataset(manifest);
    require(!data.inputs.empty(), Errc::InsufficientSamples, "manifest has no records");
    const auto& shape = data.inputs.front().shape();
    const auto spec = nn::default_model_spec(shape[1], shape[2], pipeline::kNumClasses);
    const auto result = pipeline::train(spec, data, plan, a.config);

    const fs::path ckpt = g.path(a.checkpoint);
    ensure_parent(ckpt);
    nn::save_checkpoint(result.checkpoint.spec, result.checkpoint.params, ckpt);
    write_reports(g, a.report, result.report);
    if (!g.quiet) {
        std::cout << "best epoch: " << result.report.best_epoch << '\n';
        if (result.report.test)
            std::cout << "test " << pipeline::format_eval(*result.report.test);
        std::cout << "checkpoint: " << ckpt.string() << '\n';
    }
    return kOk;
}

struct EvalArgs {
    std::string manifest;
    std::string checkpoint = "model.rdg";
    std::string subset = "all";
    std::string report;
    SplitFlags split;
};

int run_eval(const Globals& g, const EvalArgs& a) {
    require(a.split.train_per_class >= 1 && a.split.val_per_class >= 0, Errc::InvalidArgument,
            "--train-per-class must be >= 1 and --val-per-class >= 0");
    const auto ckpt = nn::load_checkpoint(g.path(a.checkpoint));
    const auto manifest = pipeline::read_manifest(g.path(a.manifest));
    std::vector<std::size_t> idx;
    if (a.subset == "all") {
        idx = manifest.all_indices();
    } else {
        const auto plan = pipeline::split(manifest, g.seed_or(pipeline::TrainConfig{}.seed),
                                          a.split.train_per_class, a.split.val_per_class);
        idx = a.subset == "train" ? plan.train : a.subset == "val" ? plan.validation : plan.test;
    }
    const auto rep = pipeline::evaluate(ckpt, manifest, idx);
    const std::string text = "subset: " + a.subset + "\n" + pipeline::format_eval(rep);
    if (!a.report.empty()) {
        write_text(g.path(a.report + ".txt"), text);
        write_text(g.path(a.report + ".csv"),
                   "subset,total,correct,accuracy\n" + a.subset + ',' + std::to_string(rep.total()) + ',' +
                       std::to_string(rep.correct()) + ',' +
                       pipeline::percent(rep.accuracy()).substr(0, pipeline::percent(rep.accuracy()).size() - 1) +
                       '\n');
    }
    if (!g.quiet)
        std::cout << text;
    return kOk;
}

struct TransferArgs {
    std::string checkpoint;
    std::string manifest;
    std::string out = "transfer.rdg";
    std::string report = "transfer_report";
    int train_per_class = 5;
    pipeline::TransferConfig config;
};

int run_transfer(const Globals& g, TransferArgs a) {
    require(a.train_per_class >= 1, Errc::InvalidArgument, "--train-per-class must be >= 1");
    require(a.config.val_per_class >= 0, Errc::InvalidArgument, "--val-per-class must be >= 0");
    require(a.config.retained_lr_scale >= 0.0, Errc::InvalidArgument, "--retained-lr-scale must be >= 0");
    const std::uint64_t seed = g.seed_or(a.config.train.seed);
    a.config.train.seed = seed;
    check_train_config(a.config.train);

    const auto source = nn::load_checkpoint(g.path(a.checkpoint));
    const auto target = pipeline::read_manifest(g.path(a.manifest));
    const auto result = pipeline::transfer(source, target, a.train_per_class, seed, a.config);

    const fs::path out = g.path(a.out);
    ensure_parent(out);
    nn::save_checkpoint(result.checkpoint.spec, result.checkpoint.params, out);
    write_reports(g, a.report, result.report);
    if (!g.quiet) {
        std::cout << "training images: " << result.report.train_size << ", best epoch: " << result.report.best_epoch
                  << '\n';
        if (result.report.test)
            std::cout << "test " << pipeline::format_eval(*result.report.test);
        std::cout << "checkpoint: " << out.string() << '\n';
    }
    return kOk;
}

// ---- gradcheck -------------------------------------------------------------

struct GradArgs {
    int instances = 1;
    int height = spectrogram::ImageConfig{}.height;
    int width = spectrogram::ImageConfig{}.width;
    double tolerance = 1e-2;
    nn::GradCheckOptions options;
};

int run_gradcheck(const Globals& g, const GradArgs& a) {
    require(a.instances >= 1, Errc::InvalidArgument, "--instances must be >= 1");
    require(a.height >= 8 && a.width >= 8, Errc::InvalidArgument, "--height and --width must be >= 8");
    require(a.options.epsilon >= 1e-4 && a.options.epsilon <= 1e-2, Errc::InvalidArgument,
            "--epsilon must lie in [1e-4, 1e-2]");
    require(a.options.samples_per_layer >= 1, Errc::InvalidArgument, "--samples must be >= 1");

    const std::uint64_t seed = g.seed_or(0);
    const auto spec = nn::default_model_spec(static_cast<std::size_t>(a.height), static_cast<std::size_t>(a.width),
                                             pipeline::kNumClasses);
    double worst = 0.0;
    double worst_median = 0.0;
    for (int k = 0; k < a.instances; ++k) {
        const std::uint64_t s = derive_seed(seed, static_cast<std::uint64_t>(k));
        const auto params = nn::init_params(spec, s);
        Rng rng(derive_seed(s, 0x1AB));
        nn::Tensor x(nn::image_input_shape(static_cast<std::size_t>(a.height), static_cast<std::size_t>(a.width)));
        for (float& v : x.values())
            v = static_cast<float>(rng.uniform());
        const std::size_t label = rng.below(pipeline::kNumClasses);
        nn::GradCheckOptions opt = a.options;
        opt.seed = s;
        const auto rep = nn::grad_check(spec, params, x, label, opt);
        worst = std::max(worst, rep.max_relative_error);
        worst_median = std::max(worst_median, rep.median_relative_error);
        if (!g.quiet)
            std::printf("instance %d: checked %zu, max relative error %.3e, median %.3e\n", k, rep.checked,
                        rep.max_relative_error, rep.median_relative_error);
    }
    const bool ok = worst < a.tolerance;
    std::printf("max relative error %.3e (tolerance %.0e): %s\n", worst, a.tolerance, ok ? "ok" : "FAILED");
    return ok ? kOk : kCheckFailed;
}

// ---- experiment ------------------------------------------------------------

struct ExperimentArgs {
    std::string source = "quadA";
    std::string target = "quadB";
    std::uint64_t dataset_seed = pipeline::DatasetOptions{}.seed;
    int per_class = pipeline::DatasetOptions{}.per_class;
    std::string report = "experiment";
    pipeline::LadderOptions ladder;
};

int run_experiment(const Globals& g, ExperimentArgs a) {
    require(a.per_class >= 10, Errc::InvalidArgument, "--per-class must be >= 10");
    a.ladder.seed = g.seed_or(a.ladder.seed);
    a.ladder.train.validate();
    a.ladder.transfer.train.validate();
    require(a.ladder.train_per_class >= 1 && a.ladder.val_per_class >= 0, Errc::InvalidArgument,
            "--train-per-class must be >= 1 and --val-per-class >= 0");
    require(a.ladder.small_per_class >= 1 && a.ladder.large_per_class > a.ladder.small_per_class,
            Errc::InvalidArgument, "need 1 <= --small < --large");

    pipeline::DatasetOptions opt;
    opt.per_class = a.per_class;
    opt.seed = a.dataset_seed;
    auto build = [&](const std::string& name) {
        const fs::path dir = g.path(name);
        if (!g.quiet)
            std::cout << "synthesizing " << name << " into " << dir.string() << '\n';
        return pipeline::load_dataset(
            pipeline::build_synthetic_dataset(pipeline::quadrotor_preset(name), opt, dir));
    };
    const auto source = build(a.source);
    const auto target = build(a.target);
    const auto& shape = source.inputs.front().shape();
    const auto spec = nn::default_model_spec(shape[1], shape[2], pipeline::kNumClasses);
    const auto r = pipeline::run_ladder(spec, source, target, a.ladder);

    const fs::path ckpt = g.path(a.report + "_native.rdg");
    ensure_parent(ckpt);
    nn::save_checkpoint(r.native_model.checkpoint.spec, r.native_model.checkpoint.params, ckpt);

    const std::string small = "transfer " + std::to_string(2 * a.ladder.small_per_class) + " images";
    const std::string large = "transfer " + std::to_string(2 * a.ladder.large_per_class) + " images";
    std::string table = "seed: " + std::to_string(a.ladder.seed) + "\n";
    table += "native (" + a.source + ")          " + pipeline::percent(r.native) + "\n";
    table += "cross (" + a.source + " on " + a.target + ") " + pipeline::percent(r.cross) + "\n";
    table += small + "      " + pipeline::percent(r.transfer_small) + "\n";
    table += large + "      " + pipeline::percent(r.transfer_large) + "\n";
    table += std::string("monotone (gaps >= 5 points): ") + (r.monotone(0.05) ? "yes" : "no") + "\n";

    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", v * 100.0);
        return std::string(buf);
    };
    const std::string csv = "stage,accuracy\nnative," + num(r.native) + "\ncross," + num(r.cross) +
                            "\ntransfer_" + std::to_string(2 * a.ladder.small_per_class) + "," +
                            num(r.transfer_small) + "\ntransfer_" + std::to_string(2 * a.ladder.large_per_class) +
                            "," + num(r.transfer_large) + "\n";
    write_text(g.path(a.report + ".txt"), table);
    write_text(g.path(a.report + ".csv"), csv);
    if (!g.quiet)
        std::cout << table;
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"rotordiag: propeller damage diagnosis from rotor audio spectrograms"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    std::uint64_t seed_value = 0;
    auto* seed_opt = app.add_option("--seed", seed_value,
                                    "random seed (falls back to ROTORDIAG_SEED; default depends on the "
                                    "command: synth 2020, gradcheck 0, others 7)");
    app.add_flag("-q,--quiet", g.quiet, "suppress informational output");
    app.add_option("--output-dir", g.output_dir, "base directory for relative paths")->capture_default_str();

    SynthArgs synth;
    auto* c_synth = app.add_subcommand("synth", "build a synthetic spectrogram dataset and its manifest");
    c_synth->add_option("--preset", synth.preset, "airframe preset")
        ->check(CLI::IsMember(pipeline::preset_names()))
        ->capture_default_str();
    c_synth->add_option("--per-class", synth.per_class, "images per class")->capture_default_str();
    c_synth->add_option("--out", synth.out, "dataset directory (default: the preset name)");
    c_synth->add_option("--duration", synth.duration, "clip length in seconds")->capture_default_str();
    synth.image.add(c_synth);

    WavArgs wav;
    auto* c_wav = app.add_subcommand("wav", "synthesize one rotor recording as 16-bit PCM WAV");
    c_wav->add_option("--spec", wav.spec_file, "key=value synth spec file (overrides --preset)");
    c_wav->add_option("--preset", wav.preset, "airframe preset")
        ->check(CLI::IsMember(pipeline::preset_names()))
        ->capture_default_str();
    c_wav->add_option("--config", wav.config, "propeller set")
        ->check(CLI::IsMember({"config1", "config2", "config3"}))
        ->capture_default_str();
    c_wav->add_option("--thrust", wav.thrust, "thrust level")
        ->check(CLI::IsMember({"low", "medium", "high"}))
        ->capture_default_str();
    c_wav->add_option("--duration", wav.duration, "seconds")->capture_default_str();
    c_wav->add_option("--rate", wav.rate, "sample rate in Hz")->capture_default_str();
    c_wav->add_option("--out", wav.out, "output WAV")->capture_default_str();

    SpecArgs sg;
    auto* c_spec = app.add_subcommand("spectrogram", "render a WAV file as a spectrogram PPM image");
    c_spec->add_option("--wav", sg.wav, "input WAV")->required();
    c_spec->add_option("--out", sg.out, "output PPM")->capture_default_str();
    c_spec->add_option("--colormap", sg.colormap, "256x3 byte color table (default: built-in)");
    c_spec->add_option("--segment", sg.segment, "render only this segment (-1: whole clip)")
        ->capture_default_str();
    c_spec->add_option("--segment-seconds", sg.segment_seconds, "segment length")->capture_default_str();
    sg.image.add(c_spec);

    TrainArgs tr;
    auto* c_train = app.add_subcommand("train", "train the CNN on a manifest");
    c_train->add_option("--manifest", tr.manifest, "dataset manifest CSV")->required();
    c_train->add_option("--checkpoint", tr.checkpoint, "output checkpoint")->capture_default_str();
    c_train->add_option("--report", tr.report, "report stem (.txt and .csv)")->capture_default_str();
    c_train->add_option("--train-per-class", tr.split.train_per_class)->capture_default_str();
    c_train->add_option("--val-per-class", tr.split.val_per_class)->capture_default_str();
    c_train->add_option("--epochs", tr.config.epochs)->capture_default_str();
    c_train->add_option("--batch-size", tr.config.batch_size)->capture_default_str();
    c_train->add_option("--lr", tr.config.learning_rate, "learning rate")->capture_default_str();

    EvalArgs ev;
    auto* c_eval = app.add_subcommand("eval", "evaluate a checkpoint on a manifest");
    c_eval->add_option("--manifest", ev.manifest, "dataset manifest CSV")->required();
    c_eval->add_option("--checkpoint", ev.checkpoint, "checkpoint to evaluate")->capture_default_str();
    c_eval->add_option("--subset", ev.subset, "records to score; split subsets use --seed")
        ->check(CLI::IsMember({"all", "train", "val", "test"}))
        ->capture_default_str();
    c_eval->add_option("--report", ev.report, "optional report stem (.txt and .csv)");
    c_eval->add_option("--train-per-class", ev.split.train_per_class)->capture_default_str();
    c_eval->add_option("--val-per-class", ev.split.val_per_class)->capture_default_str();

    TransferArgs tf;
    auto* c_tf = app.add_subcommand("transfer", "adapt a trained checkpoint to another airframe");
    c_tf->add_option("--checkpoint", tf.checkpoint, "source checkpoint")->required();
    c_tf->add_option("--manifest", tf.manifest, "target dataset manifest CSV")->required();
    c_tf->add_option("--out", tf.out, "adapted checkpoint")->capture_default_str();
    c_tf->add_option("--report", tf.report, "report stem (.txt and .csv)")->capture_default_str();
    c_tf->add_option("--train-per-class", tf.train_per_class, "labeled target images per class")
        ->capture_default_str();
    c_tf->add_option("--val-per-class", tf.config.val_per_class)->capture_default_str();
    c_tf->add_option("--epochs", tf.config.train.epochs)->capture_default_str();
    c_tf->add_option("--batch-size", tf.config.train.batch_size)->capture_default_str();
    c_tf->add_option("--lr", tf.config.train.learning_rate, "head learning rate")->capture_default_str();
    c_tf->add_option("--retained-lr-scale", tf.config.retained_lr_scale,
                     "learning-rate factor for the retained layers")
        ->capture_default_str();

    GradArgs gc;
    auto* c_grad = app.add_subcommand("gradcheck", "finite-difference check of backpropagation");
    c_grad->add_option("--instances", gc.instances, "random models to check")->capture_default_str();
    c_grad->add_option("--epsilon", gc.options.epsilon)->capture_default_str();
    c_grad->add_option("--samples", gc.options.samples_per_layer, "parameters probed per layer")
        ->capture_default_str();
    c_grad->add_option("--tolerance", gc.tolerance, "largest accepted relative error")->capture_default_str();
    c_grad->add_option("--height", gc.height)->capture_default_str();
    c_grad->add_option("--width", gc.width)->capture_default_str();

    ExperimentArgs ex;
    auto* c_ex = app.add_subcommand("experiment",
                                    "native training, cross-airframe evaluation and the two transfer runs");
    c_ex->add_option("--source", ex.source)->check(CLI::IsMember(pipeline::preset_names()))->capture_default_str();
    c_ex->add_option("--target", ex.target)->check(CLI::IsMember(pipeline::preset_names()))->capture_default_str();
    c_ex->add_option("--dataset-seed", ex.dataset_seed)->capture_default_str();
    c_ex->add_option("--per-class", ex.per_class, "images per class in each dataset")->capture_default_str();
    c_ex->add_option("--report", ex.report, "report stem")->capture_default_str();
    c_ex->add_option("--epochs", ex.ladder.train.epochs, "native training epochs")->capture_default_str();
    c_ex->add_option("--transfer-epochs", ex.ladder.transfer.train.epochs)->capture_default_str();
    c_ex->add_option("--small", ex.ladder.small_per_class, "transfer images per class, first run")
        ->capture_default_str();
    c_ex->add_option("--large", ex.ladder.large_per_class, "transfer images per class, second run")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (seed_opt->count() > 0)
            g.seed = seed_value;
        apply_env_seed(g);
        if (c_synth->parsed())
            return run_synth(g, synth);
        if (c_wav->parsed())
            return run_wav(g, wav);
        if (c_spec->parsed())
            return run_spectrogram(g, sg);
        if (c_train->parsed())
            return run_train(g, tr);
        if (c_eval->parsed())
            return run_eval(g, ev);
        if (c_tf->parsed())
            return run_transfer(g, tf);
        if (c_grad->parsed())
            return run_gradcheck(g, gc);
        if (c_ex->parsed())
            return run_experiment(g, ex);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e.code());
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kCheckFailed;
    }
    return kUsage;
}
