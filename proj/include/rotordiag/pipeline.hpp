#pragma once

#include <rotordiag/audio.hpp>
#include <rotordiag/nn/checkpoint.hpp>
#include <rotordiag/nn/model.hpp>
#include <rotordiag/spectrogram.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rotordiag::pipeline {

/// Class index order used by the classifier output.
enum class Label : std::size_t { Unbroken = 0, Broken = 1 };
inline constexpr std::size_t kNumClasses = 2;

/// Propeller sets of the bench tests: Config1 is four good propellers,
/// Config2 and Config3 each swap in one damaged propeller (A and B).
enum class PropellerSet { Config1, Config2, Config3 };
enum class Thrust { Low, Medium, High };

std::string to_string(Label v);
std::string to_string(PropellerSet v);
std::string to_string(Thrust v);
Label parse_label(const std::string& s);
PropellerSet parse_propeller_set(const std::string& s);
Thrust parse_thrust(const std::string& s);

inline std::size_t class_index(Label l) { return static_cast<std::size_t>(l); }

/// Shaft-rate multiplier of a thrust command: 0.8, 1.0, 1.2.
double thrust_multiplier(Thrust t);

struct SampleRecord {
    std::string image_path; // relative to the manifest root unless absolute
    Label label = Label::Unbroken;
    std::string quadrotor;
    PropellerSet propeller_set = PropellerSet::Config1;
    Thrust thrust = Thrust::Medium;
};

/// Config1 must be Unbroken, Config2/Config3 must be Broken.
void check_record(const SampleRecord& r);

struct DatasetManifest {
    std::vector<SampleRecord> records;
    std::filesystem::path root;

    std::filesystem::path resolve(const SampleRecord& r) const;
    std::vector<std::size_t> indices_of(Label label) const;
    std::vector<std::size_t> all_indices() const;
};

// CSV with header `path,label,quadrotor,config,thrust`. The root of a manifest
// read from disk is the directory containing the file.
DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
std::string format_manifest(const DatasetManifest& manifest);

/// Damage signature ranges for one damaged propeller set. Each sample draws
/// its severity uniformly from [lo, hi].
struct DamageProfile {
    std::array<double, 2> imbalance_depth;
    std::array<double, 2> subharmonic_gain;
};

/// A synthetic airframe: the healthy rotor signature at medium thrust plus
/// how the two damaged propellers alter it.
struct QuadrotorPreset {
    std::string name;
    audio::RotorSynthSpec base;     // healthy, medium thrust
    double shaft_jitter = 0.03;     // relative, uniform +/-
    double amplitude_jitter = 0.2;  // relative, uniform +/- per harmonic
    double noise_jitter = 0.2;      // relative, uniform +/-
    DamageProfile config2;
    DamageProfile config3;
};

/// "quadA" or "quadB"; anything else is InvalidArgument.
QuadrotorPreset quadrotor_preset(const std::string& name);
std::vector<std::string> preset_names();

/// Synth spec of one recording. Deterministic in (preset, config, thrust, seed).
audio::RotorSynthSpec sample_synth_spec(const QuadrotorPreset& preset, PropellerSet config, Thrust thrust,
                                        std::uint64_t seed);

struct DatasetOptions {
    int per_class = 80;
    std::uint64_t seed = 2020;
    double duration_s = audio::kDefaultSegmentSeconds;
    int sample_rate_hz = audio::kDefaultSampleRate;
    spectrogram::ImageConfig image{};
};

/// Writes per_class Unbroken and per_class Broken images (thrust levels
/// cycled, Broken alternating Config2/Config3) to out_dir, plus
/// out_dir/manifest.csv, and returns the manifest.
DatasetManifest build_synthetic_dataset(const QuadrotorPreset& preset, const DatasetOptions& options,
                                        const std::filesystem::path& out_dir);

struct SplitPlan {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
    std::uint64_t seed = 0;
};

/// Seeded shuffle within each class; the first train_per_class go to train,
/// the next val_per_class to validation, the rest to test.
SplitPlan split(const DatasetManifest& manifest, std::uint64_t seed, int train_per_class, int val_per_class);
/// Same protocol over a bare label list (class indices).
SplitPlan split(const std::vector<std::size_t>& labels, std::uint64_t seed, int train_per_class,
                int val_per_class);

/// Image as a [3, H, W] tensor scaled to [0, 1].
nn::Tensor image_to_tensor(const spectrogram::SpecImage& img);

/// Every image of a manifest, decoded once.
struct LoadedDataset {
    std::vector<nn::Tensor> inputs;
    std::vector<std::size_t> labels;
};
LoadedDataset load_dataset(const DatasetManifest& manifest);

struct EvalReport {
    /// confusion[true][predicted]
    std::array<std::array<std::size_t, kNumClasses>, kNumClasses> confusion{};

    std::size_t total() const noexcept;
    std::size_t correct() const noexcept;
    double accuracy() const noexcept;
};

EvalReport evaluate(const nn::ModelSpec& spec, const nn::ModelParams& params, const LoadedDataset& data,
                    const std::vector<std::size_t>& indices);
EvalReport evaluate(const nn::Checkpoint& checkpoint, const DatasetManifest& manifest,
                    const std::vector<std::size_t>& indices);

/// Source-domain model scored on every record of another airframe, no adaptation.
EvalReport cross_evaluate(const nn::Checkpoint& checkpoint, const DatasetManifest& target);

struct TrainConfig {
    int epochs = 30;
    int batch_size = 10;
    double learning_rate = 0.01;
    std::uint64_t seed = 7; // weight init and batch order
    /// Called with the dataset index of every sample that enters a gradient.
    std::function<void(std::size_t)> on_gradient_sample;

    void validate() const;
};

struct EpochMetrics {
    int epoch = 0; // 0 is the state before any update
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double validation_loss = 0.0;
    double validation_accuracy = 0.0;
};

struct TrainReport {
    std::vector<EpochMetrics> epochs;
    int best_epoch = 0;
    std::optional<EvalReport> test;
    std::uint64_t seed = 0;
    std::string mode; // "train" or "transfer"
    TrainConfig config;
    std::size_t train_size = 0;
    std::size_t validation_size = 0;
    std::size_t test_size = 0;
};

struct TrainResult {
    nn::Checkpoint checkpoint;
    TrainReport report;
};

/// Mini-batch SGD on plan.train from a fresh He initialization. Validation
/// only selects the returned parameters (best accuracy, ties to lower loss,
/// then earlier epoch); it never enters a gradient.
TrainResult train(const nn::ModelSpec& spec, const DatasetManifest& manifest, const SplitPlan& plan,
                  const TrainConfig& config);
TrainResult train(const nn::ModelSpec& spec, const LoadedDataset& data, const SplitPlan& plan,
                  const TrainConfig& config);

struct TransferConfig {
    TrainConfig train{60, 10, 0.01, 7, {}};
    int val_per_class = 15;
    /// Learning-rate factor for every layer except the replaced head.
    double retained_lr_scale = 0.1;
};

/// Adapts a trained model to another airframe with n_train_per_class labeled
/// samples per class: the final Dense layer is re-initialized from `seed`,
/// then all layers are fine-tuned (retained layers at a reduced rate). The
/// unadapted source model is the epoch-0 candidate, so zero epochs returns
/// it unchanged.
TrainResult transfer(const nn::Checkpoint& source, const DatasetManifest& target, int n_train_per_class,
                     std::uint64_t seed, const TransferConfig& config);
TrainResult transfer(const nn::Checkpoint& source, const LoadedDataset& target, const SplitPlan& plan,
                     std::uint64_t seed, const TransferConfig& config);

/// Human-readable report; accuracies as percentages with two decimals.
std::string format_report(const TrainReport& report);
/// epoch,train_loss,train_accuracy,validation_loss,validation_accuracy
std::string format_epoch_csv(const TrainReport& report);
std::string format_eval(const EvalReport& report);
std::string percent(double accuracy);

/// The four headline numbers: native test accuracy on the source airframe,
/// cross-airframe accuracy with no adaptation, and transfer with 5 and 10
/// samples per class.
struct LadderResult {
    double native = 0.0;
    double cross = 0.0;
    double transfer_small = 0.0;
    double transfer_large = 0.0;
    TrainResult native_model;

    /// cross < small < large <= native, the two strict steps by at least min_gap.
    bool monotone(double min_gap) const;
};

struct LadderOptions {
    std::uint64_t seed = 7;
    TrainConfig train{};
    TransferConfig transfer{};
    int train_per_class = 50;
    int val_per_class = 15;
    int small_per_class = 5;
    int large_per_class = 10;
};

LadderResult run_ladder(const nn::ModelSpec& spec, const LoadedDataset& source, const LoadedDataset& target,
                        const LadderOptions& options);

} // namespace rotordiag::pipeline
