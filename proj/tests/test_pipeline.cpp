#include "test_util.hpp"

#include <rotordiag/error.hpp>
#include <rotordiag/pipeline.hpp>
#include <rotordiag/rng.hpp>

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace rotordiag;
using namespace rotordiag::pipeline;
using testutil::TempDir;

namespace {

Errc error_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return Errc::InvalidArgument;
}

DatasetOptions small_options() {
    DatasetOptions o;
    o.per_class = 10;
    o.duration_s = 1.0;
    o.image.height = 16;
    o.image.width = 16;
    return o;
}

/// Two-class toy set on [3, 16, 16]: class 1 carries a bright band in the
/// lower rows, both classes carry uniform noise.
LoadedDataset toy_dataset(int per_class, std::uint64_t seed) {
    Rng rng(seed);
    LoadedDataset d;
    for (std::size_t label = 0; label < 2; ++label)
        for (int i = 0; i < per_class; ++i) {
            nn::Tensor t = testutil::random_tensor<float>(rng, {3, 16, 16}, 0.0, 0.5);
            if (label == 1)
                for (std::size_t c = 0; c < 3; ++c)
                    for (std::size_t x = 0; x < 16; ++x)
                        t.at(c, 12, x) += 0.5f;
            d.inputs.push_back(std::move(t));
            d.labels.push_back(label);
        }
    return d;
}

std::size_t count_in(const std::vector<std::size_t>& idx, const std::vector<std::size_t>& labels, std::size_t cls) {
    return static_cast<std::size_t>(std::count_if(idx.begin(), idx.end(), [&](std::size_t i) { return labels[i] == cls; }));
}

} // namespace

TEST_SUITE("manifest") {

TEST_CASE("enumerations") {
    CHECK(thrust_multiplier(Thrust::Low) == 0.8);
    CHECK(thrust_multiplier(Thrust::Medium) == 1.0);
    CHECK(thrust_multiplier(Thrust::High) == 1.2);
    for (auto t : {Thrust::Low, Thrust::Medium, Thrust::High})
        CHECK(parse_thrust(to_string(t)) == t);
    for (auto p : {PropellerSet::Config1, PropellerSet::Config2, PropellerSet::Config3})
        CHECK(parse_propeller_set(to_string(p)) == p);
    CHECK(parse_label("broken") == Label::Broken);
    CHECK(class_index(Label::Unbroken) == 0);
    CHECK(error_of([] { parse_label("Broken"); }) == Errc::Malformed);
}

TEST_CASE("write/read round-trip") {
    TempDir dir("manifest");
    DatasetManifest m;
    m.records = {{"a/x.ppm", Label::Unbroken, "quadA", PropellerSet::Config1, Thrust::Low},
                 {"/abs/y.ppm", Label::Broken, "quadB", PropellerSet::Config3, Thrust::High}};
    write_manifest(m, dir / "m.csv");
    const std::string text = "path,label,quadrotor,config,thrust\n"
                             "a/x.ppm,unbroken,quadA,config1,low\n"
                             "/abs/y.ppm,broken,quadB,config3,high\n";
    const auto bytes = testutil::slurp(dir / "m.csv");
    CHECK(std::string(bytes.begin(), bytes.end()) == text);
    const DatasetManifest back = read_manifest(dir / "m.csv");
    REQUIRE(back.records.size() == 2);
    CHECK(back.root == dir.path());
    CHECK(back.resolve(back.records[0]) == dir.path() / "a/x.ppm");
    CHECK(back.resolve(back.records[1]) == std::filesystem::path("/abs/y.ppm"));
    CHECK(back.records[1].propeller_set == PropellerSet::Config3);
    CHECK(back.indices_of(Label::Broken) == std::vector<std::size_t>{1});
}

TEST_CASE("CRLF and blank lines are tolerated") {
    TempDir dir("manifest");
    const std::string text = "path,label,quadrotor,config,thrust\r\n\r\nx.ppm,broken,q,config2,medium\r\n";
    testutil::spit(dir / "m.csv", std::vector<std::uint8_t>(text.begin(), text.end()));
    CHECK(read_manifest(dir / "m.csv").records.size() == 1);
}

TEST_CASE("bad manifests") {
    TempDir dir("manifest");
    auto put = [&](const std::string& text) {
        testutil::spit(dir / "m.csv", std::vector<std::uint8_t>(text.begin(), text.end()));
        return dir / "m.csv";
    };
    const std::string header = "path,label,quadrotor,config,thrust\n";
    CHECK(error_of([&] { read_manifest(put("file,label\n")); }) == Errc::Malformed);
    CHECK(error_of([&] { read_manifest(put(header + "x.ppm,broken,q,config2\n")); }) == Errc::Malformed);
    CHECK(error_of([&] { read_manifest(put(header + "x.ppm,broken,q,config1,low\n")); }) == Errc::Malformed);
    CHECK(error_of([&] { read_manifest(put(header + "x.ppm,unbroken,q,config1,max\n")); }) == Errc::Malformed);
    CHECK(error_of([&] { read_manifest(put("")); }) == Errc::Malformed);
    CHECK(error_of([&] { read_manifest(dir / "none.csv"); }) == Errc::FileNotFound);
}

} // TEST_SUITE

TEST_SUITE("dataset") {

TEST_CASE("presets") {
    const auto names = preset_names();
    REQUIRE(names.size() == 2);
    const QuadrotorPreset a = quadrotor_preset("quadA"), b = quadrotor_preset("quadB");
    CHECK(a.base.shaft_rate_hz != b.base.shaft_rate_hz);
    CHECK(a.base.healthy());
    CHECK(b.base.healthy());
    CHECK(error_of([] { quadrotor_preset("quadC"); }) == Errc::InvalidArgument);
}

TEST_CASE("per-sample specs follow config and thrust") {
    const QuadrotorPreset p = quadrotor_preset("quadB");
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto healthy = sample_synth_spec(p, PropellerSet::Config1, Thrust::High, seed);
        CHECK(healthy.healthy());
        const double rate = healthy.shaft_rate_hz / (1.2 * p.base.shaft_rate_hz);
        CHECK(rate >= 1.0 - p.shaft_jitter);
        CHECK(rate <= 1.0 + p.shaft_jitter);

        const auto d2 = sample_synth_spec(p, PropellerSet::Config2, Thrust::Low, seed);
        CHECK_FALSE(d2.healthy());
        CHECK(d2.imbalance_depth >= p.config2.imbalance_depth[0]);
        CHECK(d2.imbalance_depth <= p.config2.imbalance_depth[1]);
        CHECK(d2.subharmonic_gain >= p.config2.subharmonic_gain[0]);
        CHECK(d2.subharmonic_gain <= p.config2.subharmonic_gain[1]);
        const auto d3 = sample_synth_spec(p, PropellerSet::Config3, Thrust::Low, seed);
        CHECK(d3.subharmonic_gain >= p.config3.subharmonic_gain[0]);
        CHECK(d3.subharmonic_gain <= p.config3.subharmonic_gain[1]);
    }
    const auto x = sample_synth_spec(p, PropellerSet::Config2, Thrust::Medium, 9);
    const auto y = sample_synth_spec(p, PropellerSet::Config2, Thrust::Medium, 9);
    CHECK(audio::format_synth_spec(x) == audio::format_synth_spec(y));
}

TEST_CASE("per_class 10 gives 20 balanced records, byte-identical on rebuild") {
    TempDir one("ds"), two("ds");
    const DatasetOptions o = small_options();
    const DatasetManifest m = build_synthetic_dataset(quadrotor_preset("quadA"), o, one.path());
    build_synthetic_dataset(quadrotor_preset("quadA"), o, two.path());
    REQUIRE(m.records.size() == 20);
    CHECK(m.indices_of(Label::Broken).size() == 10);
    CHECK(m.indices_of(Label::Unbroken).size() == 10);
    std::set<Thrust> thrusts;
    std::set<PropellerSet> sets;
    for (const auto& r : m.records) {
        CHECK_NOTHROW(check_record(r));
        thrusts.insert(r.thrust);
        sets.insert(r.propeller_set);
        CHECK(r.quadrotor == "quadA");
        CHECK(testutil::slurp(one / r.image_path) == testutil::slurp(two / r.image_path));
    }
    CHECK(thrusts.size() == 3);
    CHECK(sets.size() == 3);
    CHECK(testutil::slurp(one / "manifest.csv") == testutil::slurp(two / "manifest.csv"));
    const DatasetManifest back = read_manifest(one / "manifest.csv");
    CHECK(back.records.size() == 20);
    const LoadedDataset d = load_dataset(back);
    CHECK(d.inputs.front().shape() == nn::Shape{3, 16, 16});
}

TEST_CASE("dataset seed and preset change the images") {
    TempDir a("ds"), b("ds"), c("ds");
    DatasetOptions o = small_options();
    const auto ma = build_synthetic_dataset(quadrotor_preset("quadA"), o, a.path());
    build_synthetic_dataset(quadrotor_preset("quadB"), o, b.path());
    o.seed += 1;
    build_synthetic_dataset(quadrotor_preset("quadA"), o, c.path());
    const std::string first = ma.records.front().image_path;
    CHECK(testutil::slurp(a / first) != testutil::slurp(c / first));
}

TEST_CASE("too few samples per class is refused") {
    TempDir dir("ds");
    DatasetOptions o = small_options();
    o.per_class = 9;
    CHECK(error_of([&] { build_synthetic_dataset(quadrotor_preset("quadA"), o, dir.path()); }) ==
          Errc::InvalidArgument);
}

TEST_CASE("unwritable output directory") {
    TempDir dir("ds");
    testutil::spit(dir / "file", {1});
    CHECK(error_of([&] { build_synthetic_dataset(quadrotor_preset("quadA"), small_options(), dir / "file" / "sub"); }) ==
          Errc::Io);
}

TEST_CASE("image tensors are scaled to [0, 1] channel-first") {
    spectrogram::SpecImage img(1, 2);
    img.pixels = {255, 0, 51, 0, 255, 102};
    const nn::Tensor t = image_to_tensor(img);
    CHECK(t.shape() == nn::Shape{3, 1, 2});
    CHECK(t.at(0, 0, 0) == 1.0f);
    CHECK(t.at(1, 0, 1) == 1.0f);
    CHECK(t.at(2, 0, 0) == doctest::Approx(0.2));
    CHECK(t.at(2, 0, 1) == doctest::Approx(0.4));
}

} // TEST_SUITE

TEST_SUITE("split") {

TEST_CASE("80/80 with 50/15 gives 100/30/30") {
    std::vector<std::size_t> labels(160);
    for (std::size_t i = 80; i < 160; ++i)
        labels[i] = 1;
    const SplitPlan p = split(labels, 3, 50, 15);
    CHECK(p.train.size() == 100);
    CHECK(p.validation.size() == 30);
    CHECK(p.test.size() == 30);
    for (std::size_t cls = 0; cls < 2; ++cls) {
        CHECK(count_in(p.train, labels, cls) == 50);
        CHECK(count_in(p.validation, labels, cls) == 15);
        CHECK(count_in(p.test, labels, cls) == 15);
    }
    std::set<std::size_t> all(p.train.begin(), p.train.end());
    all.insert(p.validation.begin(), p.validation.end());
    all.insert(p.test.begin(), p.test.end());
    CHECK(all.size() == 160);
}

TEST_CASE("deterministic in the seed") {
    std::vector<std::size_t> labels(40);
    for (std::size_t i = 0; i < 40; i += 2)
        labels[i] = 1;
    const SplitPlan a = split(labels, 11, 5, 5), b = split(labels, 11, 5, 5), c = split(labels, 12, 5, 5);
    CHECK(a.train == b.train);
    CHECK(a.validation == b.validation);
    CHECK(a.test == b.test);
    CHECK(a.seed == 11);
    CHECK(a.train != c.train);
}

TEST_CASE("manifest overload agrees with the label overload") {
    DatasetManifest m;
    std::vector<std::size_t> labels;
    for (int i = 0; i < 30; ++i) {
        const bool broken = i % 3 == 0;
        m.records.push_back({"x", broken ? Label::Broken : Label::Unbroken, "q",
                             broken ? PropellerSet::Config2 : PropellerSet::Config1, Thrust::Low});
        labels.push_back(broken ? 1 : 0);
    }
    CHECK(split(m, 4, 3, 2).train == split(labels, 4, 3, 2).train);
}

TEST_CASE("infeasible counts") {
    const std::vector<std::size_t> labels{0, 0, 1, 1, 1};
    CHECK(error_of([&] { split(labels, 1, 2, 1); }) == Errc::InsufficientSamples);
    CHECK(error_of([&] { split(labels, 1, -1, 1); }) == Errc::InvalidArgument);
    const SplitPlan p = split(labels, 1, 2, 0);
    CHECK(p.validation.empty());
    REQUIRE(p.test.size() == 1);
    CHECK(labels[p.test[0]] == 1);
}

} // TEST_SUITE

TEST_SUITE("training") {

const nn::ModelSpec kSpec = nn::default_model_spec(16, 16);

TEST_CASE("zero epochs returns the initial parameters") {
    const LoadedDataset d = toy_dataset(10, 1);
    const SplitPlan plan = split(d.labels, 1, 5, 2);
    TrainConfig cfg;
    cfg.epochs = 0;
    cfg.seed = 21;
    const TrainResult r = train(kSpec, d, plan, cfg);
    CHECK(r.checkpoint.params == nn::init_params(kSpec, 21));
    CHECK(r.report.best_epoch == 0);
    CHECK(r.report.epochs.size() == 1);
    REQUIRE(r.report.test.has_value());
    CHECK(r.report.test->total() == 6);
}

TEST_CASE("learns a separable toy problem") {
    const LoadedDataset d = toy_dataset(30, 2);
    const SplitPlan plan = split(d.labels, 2, 15, 5);
    TrainConfig cfg;
    cfg.epochs = 15;
    const TrainResult r = train(kSpec, d, plan, cfg);
    REQUIRE(r.report.test.has_value());
    CHECK(r.report.test->accuracy() >= 0.9);
    CHECK(r.report.epochs.size() == 16);
    CHECK(r.report.epochs[static_cast<std::size_t>(r.report.best_epoch)].validation_accuracy >=
          r.report.epochs.front().validation_accuracy);
}

TEST_CASE("validation and test samples never enter a gradient") {
    const LoadedDataset d = toy_dataset(12, 3);
    const SplitPlan plan = split(d.labels, 3, 6, 3);
    std::vector<std::size_t> seen;
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 4;
    cfg.on_gradient_sample = [&](std::size_t i) { seen.push_back(i); };
    train(kSpec, d, plan, cfg);
    CHECK(seen.size() == 3 * plan.train.size());
    const std::set<std::size_t> train_set(plan.train.begin(), plan.train.end());
    for (std::size_t i : seen)
        CHECK(train_set.count(i) == 1);
    for (std::size_t i : train_set)
        CHECK(std::count(seen.begin(), seen.end(), i) == 3);
}

TEST_CASE("mini-batch gradient is the batch mean") {
    // one sample versus the same sample twice in one batch: identical updates
    LoadedDataset d = toy_dataset(3, 4);
    d.inputs.push_back(d.inputs[4]);
    d.labels.push_back(d.labels[4]);
    SplitPlan single, doubled;
    single.train = {4};
    doubled.train = {4, 6};
    TrainConfig one;
    one.epochs = 1;
    one.batch_size = 1;
    TrainConfig two = one;
    two.batch_size = 2;
    CHECK(train(kSpec, d, single, one).checkpoint.params == train(kSpec, d, doubled, two).checkpoint.params);
}

TEST_CASE("training is reproducible") {
    const LoadedDataset d = toy_dataset(10, 5);
    const SplitPlan plan = split(d.labels, 5, 5, 2);
    TrainConfig cfg;
    cfg.epochs = 3;
    const TrainResult a = train(kSpec, d, plan, cfg), b = train(kSpec, d, plan, cfg);
    CHECK(a.checkpoint.params == b.checkpoint.params);
    CHECK(format_report(a.report) == format_report(b.report));
    CHECK(format_epoch_csv(a.report) == format_epoch_csv(b.report));
}

TEST_CASE("bad configurations") {
    const LoadedDataset d = toy_dataset(5, 6);
    const SplitPlan plan = split(d.labels, 6, 2, 1);
    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    CHECK(error_of([&] { train(kSpec, d, plan, cfg); }) == Errc::InvalidArgument);
    cfg = TrainConfig{};
    cfg.batch_size = 0;
    CHECK(error_of([&] { train(kSpec, d, plan, cfg); }) == Errc::InvalidArgument);
    CHECK(error_of([&] { train(nn::default_model_spec(), d, plan, TrainConfig{}); }) == Errc::ShapeMismatch);
}

TEST_CASE("divergence is reported distinctly") {
    const LoadedDataset d = toy_dataset(10, 7);
    const SplitPlan plan = split(d.labels, 7, 5, 2);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.learning_rate = 1e30;
    CHECK(error_of([&] { train(kSpec, d, plan, cfg); }) == Errc::Divergence);
}

} // TEST_SUITE

TEST_SUITE("evaluation") {

const nn::ModelSpec kSpec = nn::default_model_spec(16, 16);

TEST_CASE("confusion matrix and accuracy") {
    const LoadedDataset d = toy_dataset(6, 8);
    nn::ModelParams p = nn::zero_params(kSpec);
    p.layers[1].bias[0] = 1.0f; // always predicts class 0
    const EvalReport r = evaluate(kSpec, p, d, {0, 1, 2, 6, 7});
    CHECK(r.total() == 5);
    CHECK(r.confusion[0][0] == 3);
    CHECK(r.confusion[1][0] == 2);
    CHECK(r.correct() == 3);
    CHECK(r.accuracy() == doctest::Approx(0.6));
    std::vector<std::size_t> all(12);
    for (std::size_t i = 0; i < 12; ++i)
        all[i] = i;
    CHECK(evaluate(kSpec, p, d, all).accuracy() == 0.5);
}

TEST_CASE("exact ties go to class 0") {
    const LoadedDataset d = toy_dataset(2, 9);
    const EvalReport r = evaluate(kSpec, nn::zero_params(kSpec), d, {0, 1, 2, 3});
    CHECK(r.confusion[0][0] == 2);
    CHECK(r.confusion[1][0] == 2);
}

TEST_CASE("empty or out-of-range index sets are errors") {
    const LoadedDataset d = toy_dataset(2, 9);
    const auto p = nn::zero_params(kSpec);
    CHECK(error_of([&] { evaluate(kSpec, p, d, {}); }) == Errc::InvalidArgument);
    CHECK(error_of([&] { evaluate(kSpec, p, d, {99}); }) == Errc::InvalidArgument);
}

TEST_CASE("report formatting") {
    CHECK(percent(0.9667) == "96.67%");
    CHECK(percent(1.0) == "100.00%");
    EvalReport r;
    r.confusion = {{{14, 1}, {0, 15}}};
    CHECK(format_eval(r) == "accuracy: 96.67% (29/30)\n"
                            "confusion (rows true, columns predicted; unbroken, broken):\n  14 1\n  0 15\n");
}

} // TEST_SUITE

TEST_SUITE("transfer") {

const nn::ModelSpec kSpec = nn::default_model_spec(16, 16);

nn::Checkpoint source_model() {
    const LoadedDataset d = toy_dataset(20, 10);
    TrainConfig cfg;
    cfg.epochs = 5;
    return train(kSpec, d, split(d.labels, 10, 10, 5), cfg).checkpoint;
}

TEST_CASE("zero epochs equals the unadapted source on the same test set") {
    const nn::Checkpoint src = source_model();
    const LoadedDataset target = toy_dataset(25, 11);
    const SplitPlan plan = split(target.labels, 3, 5, 15);
    TransferConfig cfg;
    cfg.train.epochs = 0;
    const TrainResult r = transfer(src, target, plan, 3, cfg);
    CHECK(r.checkpoint.params == src.params);
    REQUIRE(r.report.test.has_value());
    const EvalReport direct = evaluate(src.spec, src.params, target, plan.test);
    CHECK(r.report.test->confusion == direct.confusion);
    CHECK(r.report.mode == "transfer");
}

TEST_CASE("head is re-initialized and retained layers move at the reduced rate") {
    const nn::Checkpoint src = source_model();
    const LoadedDataset target = toy_dataset(25, 12);
    const SplitPlan plan = split(target.labels, 4, 5, 15);
    TransferConfig cfg;
    cfg.train.epochs = 1;
    cfg.retained_lr_scale = 0.0;
    std::vector<std::size_t> seen;
    cfg.train.on_gradient_sample = [&](std::size_t i) { seen.push_back(i); };
    const TrainResult r = transfer(src, target, plan, 4, cfg);
    // with a frozen conv layer, epoch 1 can only win if the head changed
    CHECK(r.checkpoint.params.layers[0] == src.params.layers[0]);
    CHECK(seen.size() == 10);
    for (std::size_t i : seen)
        CHECK(std::find(plan.train.begin(), plan.train.end(), i) != plan.train.end());
}

TEST_CASE("manifest overload uses 15 validation samples per class and is reproducible") {
    TempDir dir("xfer");
    DatasetOptions o = small_options();
    o.per_class = 25;
    const DatasetManifest target = build_synthetic_dataset(quadrotor_preset("quadB"), o, dir.path());
    const LoadedDataset src_data = toy_dataset(20, 13);
    TrainConfig tc;
    tc.epochs = 2;
    const nn::Checkpoint src = train(kSpec, src_data, split(src_data.labels, 1, 10, 5), tc).checkpoint;
    TransferConfig cfg;
    cfg.train.epochs = 3;
    const TrainResult a = transfer(src, target, 5, 9, cfg);
    const TrainResult b = transfer(src, target, 5, 9, cfg);
    CHECK(a.report.train_size == 10);
    CHECK(a.report.validation_size == 30);
    CHECK(a.report.test_size == 10);
    CHECK(a.checkpoint.params == b.checkpoint.params);
    CHECK(format_report(a.report) == format_report(b.report));
    CHECK(error_of([&] { transfer(src, target, 11, 9, cfg); }) == Errc::InsufficientSamples);
    CHECK(error_of([&] { transfer(src, target, 0, 9, cfg); }) == Errc::InvalidArgument);
}

TEST_CASE("ladder ordering") {
    pipeline::LadderResult r;
    r.cross = 0.55;
    r.transfer_small = 0.80;
    r.transfer_large = 0.90;
    r.native = 0.92;
    CHECK(r.monotone(0.05)); // the last step only needs <=
    r.native = 0.90;
    CHECK(r.monotone(0.05));
    r.native = 0.89;
    CHECK_FALSE(r.monotone(0.05));
    r.native = 1.0;
    r.transfer_large = 0.84;
    CHECK_FALSE(r.monotone(0.05));
    r.transfer_large = 0.90;
    r.cross = 0.76;
    CHECK_FALSE(r.monotone(0.05));
    CHECK(r.monotone(0.04));
}

} // TEST_SUITE
