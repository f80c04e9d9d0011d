#include <rotordiag/error.hpp>
#include <rotordiag/nn/layers.hpp>
#include <rotordiag/pipeline.hpp>
#include <rotordiag/rng.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace rotordiag::pipeline {

SplitPlan split(const std::vector<std::size_t>& labels, std::uint64_t seed, int train_per_class, int val_per_class) {
    require(train_per_class >= 0 && val_per_class >= 0, Errc::InvalidArgument,
            "split: per-class counts must be non-negative");
    SplitPlan plan;
    plan.seed = seed;
    for (std::size_t cls = 0; cls < kNumClasses; ++cls) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == cls)
                members.push_back(i);
        const auto need = static_cast<std::size_t>(train_per_class + val_per_class);
        if (members.size() < need)
            fail(Errc::InsufficientSamples, "split: class " + to_string(static_cast<Label>(cls)) + " has " +
                                                std::to_string(members.size()) + " samples, need " +
                                                std::to_string(need));
        Rng rng(derive_seed(seed, cls));
        rng.shuffle(std::span<std::size_t>(members));
        const auto t = static_cast<std::ptrdiff_t>(train_per_class);
        const auto v = static_cast<std::ptrdiff_t>(val_per_class);
        plan.train.insert(plan.train.end(), members.begin(), members.begin() + t);
        plan.validation.insert(plan.validation.end(), members.begin() + t, members.begin() + t + v);
        plan.test.insert(plan.test.end(), members.begin() + t + v, members.end());
    }
    std::sort(plan.train.begin(), plan.train.end());
    std::sort(plan.validation.begin(), plan.validation.end());
    std::sort(plan.test.begin(), plan.test.end());
    return plan;
}

SplitPlan split(const DatasetManifest& manifest, std::uint64_t seed, int train_per_class, int val_per_class) {
    std::vector<std::size_t> labels;
    labels.reserve(manifest.records.size());
    for (const auto& r : manifest.records)
        labels.push_back(class_index(r.label));
    return split(labels, seed, train_per_class, val_per_class);
}

nn::Tensor image_to_tensor(const spectrogram::SpecImage& img) {
    const auto h = static_cast<std::size_t>(img.height);
    const auto w = static_cast<std::size_t>(img.width);
    nn::Tensor t({3, h, w});
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            const std::uint8_t* px = img.at(static_cast<int>(y), static_cast<int>(x));
            for (std::size_t c = 0; c < 3; ++c)
                t.at(c, y, x) = static_cast<float>(px[c]) / 255.0f;
        }
    return t;
}

LoadedDataset load_dataset(const DatasetManifest& manifest) {
    LoadedDataset d;
    d.inputs.reserve(manifest.records.size());
    for (const auto& r : manifest.records) {
        d.inputs.push_back(image_to_tensor(spectrogram::read_image(manifest.resolve(r))));
        d.labels.push_back(class_index(r.label));
        require(d.inputs.back().shape() == d.inputs.front().shape(), Errc::ShapeMismatch,
                "dataset: image " + r.image_path + " differs in size from the first image");
    }
    return d;
}

std::size_t EvalReport::total() const noexcept {
    std::size_t n = 0;
    for (const auto& row : confusion)
        for (std::size_t v : row)
            n += v;
    return n;
}

std::size_t EvalReport::correct() const noexcept {
    std::size_t n = 0;
    for (std::size_t k = 0; k < kNumClasses; ++k)
        n += confusion[k][k];
    return n;
}

double EvalReport::accuracy() const noexcept {
    const std::size_t n = total();
    return n == 0 ? 0.0 : static_cast<double>(correct()) / static_cast<double>(n);
}

EvalReport evaluate(const nn::ModelSpec& spec, const nn::ModelParams& params, const LoadedDataset& data,
                    const std::vector<std::size_t>& indices) {
    require(!indices.empty(), Errc::InvalidArgument, "evaluate: empty index set");
    require(spec.num_classes() == kNumClasses, Errc::ShapeMismatch, "evaluate: model is not a two-class model");
    EvalReport rep;
    for (std::size_t i : indices) {
        require(i < data.inputs.size(), Errc::InvalidArgument, "evaluate: index out of range");
        const auto probs = nn::predict(spec, params, data.inputs[i]);
        ++rep.confusion[data.labels[i]][nn::argmax_class(probs)];
    }
    return rep;
}

EvalReport evaluate(const nn::Checkpoint& checkpoint, const DatasetManifest& manifest,
                    const std::vector<std::size_t>& indices) {
    require(!indices.empty(), Errc::InvalidArgument, "evaluate: empty index set");
    return evaluate(checkpoint.spec, checkpoint.params, load_dataset(manifest), indices);
}

EvalReport cross_evaluate(const nn::Checkpoint& checkpoint, const DatasetManifest& target) {
    return evaluate(checkpoint, target, target.all_indices());
}

void TrainConfig::validate() const {
    require(epochs >= 0, Errc::InvalidArgument, "train: epochs must be >= 0");
    require(batch_size >= 1, Errc::InvalidArgument, "train: batch size must be >= 1");
    require(learning_rate > 0.0 && std::isfinite(learning_rate), Errc::InvalidArgument,
            "train: learning rate must be positive");
}

namespace {

struct SetMetrics {
    double loss = 0.0;
    double accuracy = 0.0;
};

SetMetrics measure(const nn::ModelSpec& spec, const nn::ModelParams& params, const LoadedDataset& data,
                   const std::vector<std::size_t>& indices) {
    SetMetrics m;
    if (indices.empty())
        return m;
    std::size_t correct = 0;
    for (std::size_t i : indices) {
        const auto probs = nn::predict(spec, params, data.inputs[i]);
        m.loss += nn::cross_entropy(probs, data.labels[i]);
        correct += nn::argmax_class(probs) == data.labels[i] ? 1 : 0;
    }
    m.loss /= static_cast<double>(indices.size());
    m.accuracy = static_cast<double>(correct) / static_cast<double>(indices.size());
    return m;
}

void check_plan(const LoadedDataset& data, const SplitPlan& plan) {
    for (const auto* set : {&plan.train, &plan.validation, &plan.test})
        for (std::size_t i : *set)
            require(i < data.inputs.size(), Errc::InvalidArgument, "split index out of range for dataset");
}

/// Shared SGD loop. `start` is where optimization begins; `epoch0` is the
/// candidate reported and selectable as epoch 0 (usually the same model).
TrainResult fit(const nn::ModelSpec& spec, const nn::ModelParams& start, const nn::ModelParams& epoch0,
                const LoadedDataset& data, const SplitPlan& plan, const TrainConfig& config,
                const std::vector<double>& layer_rates, std::uint64_t seed, std::string mode) {
    config.validate();
    check_plan(data, plan);
    require(config.epochs == 0 || !plan.train.empty(), Errc::InsufficientSamples, "train: empty training set");

    TrainResult out;
    TrainReport& rep = out.report;
    rep.seed = seed;
    rep.mode = std::move(mode);
    rep.config = config;
    rep.config.on_gradient_sample = nullptr;
    rep.train_size = plan.train.size();
    rep.validation_size = plan.validation.size();
    rep.test_size = plan.test.size();

    auto record = [&](int epoch, double train_loss, double train_acc, const nn::ModelParams& p) {
        const SetMetrics val = measure(spec, p, data, plan.validation);
        rep.epochs.push_back({epoch, train_loss, train_acc, val.loss, val.accuracy});
        return val;
    };

    const SetMetrics initial_train = measure(spec, epoch0, data, plan.train);
    SetMetrics best = record(0, initial_train.loss, initial_train.accuracy, epoch0);
    nn::ModelParams best_params = epoch0;
    rep.best_epoch = 0;

    nn::ModelParams params = start;
    std::vector<std::size_t> order = plan.train;
    const auto batch = static_cast<std::size_t>(config.batch_size);
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        Rng rng(derive_seed(seed, 0xE90C0000u + static_cast<std::uint64_t>(epoch)));
        rng.shuffle(std::span<std::size_t>(order));
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t b = 0; b < order.size(); b += batch) {
            const std::size_t end = std::min(order.size(), b + batch);
            nn::Gradients grads;
            for (std::size_t k = b; k < end; ++k) {
                const std::size_t i = order[k];
                if (config.on_gradient_sample)
                    config.on_gradient_sample(i);
                const auto fwd = nn::forward(spec, params, data.inputs[i]);
                const double loss = nn::cross_entropy(fwd.probs, data.labels[i]);
                if (!std::isfinite(loss))
                    fail(Errc::Divergence, "training diverged: non-finite loss at epoch " + std::to_string(epoch));
                loss_sum += loss;
                correct += nn::argmax_class(fwd.probs) == data.labels[i] ? 1 : 0;
                nn::accumulate(grads, nn::backward(spec, params, fwd.cache, data.labels[i]));
            }
            nn::scale(grads, 1.0f / static_cast<float>(end - b));
            nn::sgd_step_inplace(params, grads, layer_rates);
        }
        const double n = static_cast<double>(order.size());
        const SetMetrics val = record(epoch, loss_sum / n, static_cast<double>(correct) / n, params);
        if (!std::isfinite(val.loss) && !plan.validation.empty())
            fail(Errc::Divergence, "training diverged: non-finite validation loss at epoch " + std::to_string(epoch));
        const bool better = plan.validation.empty() ||
                            val.accuracy > best.accuracy ||
                            (val.accuracy == best.accuracy && val.loss < best.loss);
        if (better) {
            best = val;
            best_params = params;
            rep.best_epoch = epoch;
        }
    }

    if (!plan.test.empty())
        rep.test = evaluate(spec, best_params, data, plan.test);
    out.checkpoint = {spec, std::move(best_params)};
    return out;
}

} // namespace

TrainResult train(const nn::ModelSpec& spec, const LoadedDataset& data, const SplitPlan& plan,
                  const TrainConfig& config) {
    require(!data.inputs.empty(), Errc::InsufficientSamples, "train: empty dataset");
    spec.validate(data.inputs.front().shape());
    const nn::ModelParams init = nn::init_params(spec, config.seed);
    const std::vector<double> rates(init.layers.size(), config.learning_rate);
    return fit(spec, init, init, data, plan, config, rates, config.seed, "train");
}

TrainResult train(const nn::ModelSpec& spec, const DatasetManifest& manifest, const SplitPlan& plan,
                  const TrainConfig& config) {
    return train(spec, load_dataset(manifest), plan, config);
}

TrainResult transfer(const nn::Checkpoint& source, const LoadedDataset& target, const SplitPlan& plan,
                     std::uint64_t seed, const TransferConfig& config) {
    require(!target.inputs.empty(), Errc::InsufficientSamples, "transfer: empty target dataset");
    require(config.retained_lr_scale >= 0.0, Errc::InvalidArgument, "transfer: retained lr scale must be >= 0");
    const nn::ModelSpec& spec = source.spec;
    spec.validate(target.inputs.front().shape());
    nn::check_params(spec, source.params);

    const auto pidx = spec.parametric_layers();
    require(!pidx.empty() && std::holds_alternative<nn::Dense>(spec.layers[pidx.back()]), Errc::ShapeMismatch,
            "transfer: model has no Dense head to replace");

    nn::ModelParams start = source.params;
    start.layers.back() = nn::init_layer(spec, pidx.back(), derive_seed(seed, 0x4EAD));

    std::vector<double> rates(pidx.size(), config.train.learning_rate * config.retained_lr_scale);
    rates.back() = config.train.learning_rate;

    TrainConfig tc = config.train;
    tc.seed = seed;
    return fit(spec, start, source.params, target, plan, tc, rates, seed, "transfer");
}

TrainResult transfer(const nn::Checkpoint& source, const DatasetManifest& target, int n_train_per_class,
                     std::uint64_t seed, const TransferConfig& config) {
    require(n_train_per_class >= 1, Errc::InvalidArgument, "transfer: need at least one training sample per class");
    const SplitPlan plan = split(target, seed, n_train_per_class, config.val_per_class);
    return transfer(source, load_dataset(target), plan, seed, config);
}

bool LadderResult::monotone(double min_gap) const {
    return transfer_small - cross >= min_gap && transfer_large - transfer_small >= min_gap &&
           transfer_large <= native;
}

LadderResult run_ladder(const nn::ModelSpec& spec, const LoadedDataset& source, const LoadedDataset& target,
                        const LadderOptions& options) {
    LadderResult r;
    TrainConfig tc = options.train;
    tc.seed = options.seed;
    const SplitPlan plan = split(source.labels, options.seed, options.train_per_class, options.val_per_class);
    r.native_model = train(spec, source, plan, tc);
    require(r.native_model.report.test.has_value(), Errc::InsufficientSamples, "ladder: source test set is empty");
    r.native = r.native_model.report.test->accuracy();

    std::vector<std::size_t> all(target.inputs.size());
    for (std::size_t i = 0; i < all.size(); ++i)
        all[i] = i;
    r.cross = evaluate(spec, r.native_model.checkpoint.params, target, all).accuracy();

    auto adapt = [&](int per_class) {
        const SplitPlan tp = split(target.labels, options.seed, per_class, options.transfer.val_per_class);
        const TrainResult t = transfer(r.native_model.checkpoint, target, tp, options.seed, options.transfer);
        require(t.report.test.has_value(), Errc::InsufficientSamples, "ladder: target test set is empty");
        return t.report.test->accuracy();
    };
    r.transfer_small = adapt(options.small_per_class);
    r.transfer_large = adapt(options.large_per_class);
    return r;
}

} // namespace rotordiag::pipeline
