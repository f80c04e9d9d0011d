#include <rotordiag/audio.hpp>
#include <rotordiag/error.hpp>
#include <rotordiag/nn/checkpoint.hpp>
#include <rotordiag/nn/gradcheck.hpp>
#include <rotordiag/nn/model.hpp>
#include <rotordiag/pipeline.hpp>
#include <rotordiag/spectrogram.hpp>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

namespace py = pybind11;
using namespace rotordiag;

namespace {

using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

audio::AudioClip to_clip(const F64Array& samples, int rate) {
    require(samples.ndim() == 1, Errc::InvalidArgument, "samples must be one-dimensional");
    audio::AudioClip clip;
    clip.sample_rate_hz = rate;
    clip.samples.assign(samples.data(), samples.data() + samples.size());
    return clip;
}

F64Array to_array(const std::vector<double>& v) {
    F64Array out(static_cast<py::ssize_t>(v.size()));
    std::memcpy(out.mutable_data(), v.data(), v.size() * sizeof(double));
    return out;
}

U8Array image_to_array(const spectrogram::SpecImage& img) {
    U8Array out({img.height, img.width, 3});
    std::memcpy(out.mutable_data(), img.pixels.data(), img.pixels.size());
    return out;
}

spectrogram::SpecImage array_to_image(const U8Array& a) {
    require(a.ndim() == 3 && a.shape(2) == 3, Errc::ShapeMismatch, "image must be [height, width, 3]");
    spectrogram::SpecImage img(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
    std::memcpy(img.pixels.data(), a.data(), img.pixels.size());
    return img;
}

spectrogram::ImageConfig image_config(int window, int hop, double floor_db, double max_freq, int height, int width) {
    spectrogram::ImageConfig c;
    c.stft.window_len = window;
    c.stft.hop = hop;
    c.floor_db = floor_db;
    c.max_freq_hz = max_freq;
    c.height = height;
    c.width = width;
    c.validate();
    return c;
}

} // namespace

PYBIND11_MODULE(_rotordiag, m) {
    m.doc() = "Rotor audio synthesis, spectrogram images and the CNN damage classifier";

    // rotordiag.Error carries the category (e.g. "file not found") in `code`.
    static py::exception<Error> exc(m, "Error", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p)
                std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object err = py::reinterpret_borrow<py::object>(exc)(e.what());
            err.attr("code") = std::string(to_string(e.code()));
            py::set_error(exc, err);
        }
    });

    py::class_<audio::RotorSynthSpec>(m, "RotorSynthSpec")
        .def(py::init<>())
        .def_readwrite("shaft_rate_hz", &audio::RotorSynthSpec::shaft_rate_hz)
        .def_readwrite("blade_count", &audio::RotorSynthSpec::blade_count)
        .def_readwrite("harmonic_amplitudes", &audio::RotorSynthSpec::harmonic_amplitudes)
        .def_readwrite("imbalance_depth", &audio::RotorSynthSpec::imbalance_depth)
        .def_readwrite("subharmonic_gain", &audio::RotorSynthSpec::subharmonic_gain)
        .def_readwrite("noise_level", &audio::RotorSynthSpec::noise_level)
        .def_readwrite("seed", &audio::RotorSynthSpec::seed)
        .def_property_readonly("blade_pass_hz", &audio::RotorSynthSpec::blade_pass_hz)
        .def_property_readonly("healthy", &audio::RotorSynthSpec::healthy)
        .def("__repr__", [](const audio::RotorSynthSpec& s) { return audio::format_synth_spec(s); });

    m.def("parse_synth_spec", &audio::parse_synth_spec, py::arg("text"));
    m.def("read_synth_spec", &audio::read_synth_spec, py::arg("path"));

    m.def(
        "synthesize",
        [](const audio::RotorSynthSpec& spec, double duration_s, int rate) {
            return to_array(audio::synth_rotor_audio(spec, duration_s, rate).samples);
        },
        py::arg("spec"), py::arg("duration_s"), py::arg("sample_rate_hz") = audio::kDefaultSampleRate,
        "Rotor recording as float64 samples in [-1, 1].");

    m.def(
        "preset_sample",
        [](const std::string& preset, const std::string& config, const std::string& thrust, std::uint64_t seed) {
            return pipeline::sample_synth_spec(pipeline::quadrotor_preset(preset),
                                               pipeline::parse_propeller_set(config), pipeline::parse_thrust(thrust),
                                               seed);
        },
        py::arg("preset") = "quadA", py::arg("config") = "config1", py::arg("thrust") = "medium",
        py::arg("seed") = 0);

    m.def(
        "read_wav",
        [](const std::filesystem::path& path) {
            const auto clip = audio::read_wav(path);
            return py::make_tuple(to_array(clip.samples), clip.sample_rate_hz);
        },
        py::arg("path"), "Returns (samples, sample_rate_hz).");
    m.def(
        "write_wav",
        [](const std::filesystem::path& path, const F64Array& samples, int rate) {
            audio::write_wav(to_clip(samples, rate), path);
        },
        py::arg("path"), py::arg("samples"), py::arg("sample_rate_hz") = audio::kDefaultSampleRate);

    m.def(
        "stft",
        [](const F64Array& samples, int window_len, int hop) {
            const auto s = spectrogram::stft(to_clip(samples, audio::kDefaultSampleRate), {window_len, hop});
            F64Array out({s.frames(), s.bins()});
            std::memcpy(out.mutable_data(), s.magnitudes.data.data(), s.magnitudes.data.size() * sizeof(double));
            return out;
        },
        py::arg("samples"), py::arg("window_len") = 1024, py::arg("hop") = 512,
        "Hann-windowed magnitude spectrogram, shape [frames, window_len // 2 + 1].");

    m.def(
        "render",
        [](const F64Array& samples, int rate, int window, int hop, double floor_db, double max_freq, int height,
           int width) {
            return image_to_array(spectrogram::render(to_clip(samples, rate),
                                                      image_config(window, hop, floor_db, max_freq, height, width)));
        },
        py::arg("samples"), py::arg("sample_rate_hz") = audio::kDefaultSampleRate, py::arg("window_len") = 1024,
        py::arg("hop") = 512, py::arg("floor_db") = -100.0, py::arg("max_freq_hz") = 2000.0, py::arg("height") = 64,
        py::arg("width") = 64, "Spectrogram image as uint8 [height, width, 3].");

    m.def(
        "read_image", [](const std::filesystem::path& path) { return image_to_array(spectrogram::read_image(path)); },
        py::arg("path"));
    m.def(
        "write_image",
        [](const std::filesystem::path& path, const U8Array& img) { spectrogram::write_image(array_to_image(img), path); },
        py::arg("path"), py::arg("image"));

    py::class_<nn::Checkpoint>(m, "Model")
        .def_static(
            "default", [](int height, int width, std::uint64_t seed) {
                const auto spec = nn::default_model_spec(height, width);
                return nn::Checkpoint{spec, nn::init_params(spec, seed)};
            },
            py::arg("height") = 64, py::arg("width") = 64, py::arg("seed") = 0,
            "Freshly initialized default architecture.")
        .def_static("load", &nn::load_checkpoint, py::arg("path"))
        .def("save", [](const nn::Checkpoint& c, const std::filesystem::path& path) {
            nn::save_checkpoint(c.spec, c.params, path);
        }, py::arg("path"))
        .def_property_readonly("parameter_count", [](const nn::Checkpoint& c) { return c.params.count(); })
        .def(
            "predict",
            [](const nn::Checkpoint& c, const U8Array& img) {
                const auto probs = nn::predict(c.spec, c.params, pipeline::image_to_tensor(array_to_image(img)));
                return std::vector<double>(probs.values().begin(), probs.values().end());
            },
            py::arg("image"), "Class probabilities [unbroken, broken].")
        .def(
            "grad_check",
            [](const nn::Checkpoint& c, const U8Array& img, std::size_t label, std::size_t samples,
               std::uint64_t seed) {
                nn::GradCheckOptions opt;
                opt.samples_per_layer = samples;
                opt.seed = seed;
                const auto r = nn::grad_check(c.spec, c.params, pipeline::image_to_tensor(array_to_image(img)),
                                              label, opt);
                py::dict d;
                d["max_relative_error"] = r.max_relative_error;
                d["median_relative_error"] = r.median_relative_error;
                d["checked"] = r.checked;
                d["refined"] = r.refined;
                d["kinked"] = r.kinked;
                return d;
            },
            py::arg("image"), py::arg("label"), py::arg("samples_per_layer") = 64, py::arg("seed") = 0);

    m.def(
        "split",
        [](const std::vector<std::size_t>& labels, std::uint64_t seed, int train_per_class, int val_per_class) {
            const auto p = pipeline::split(labels, seed, train_per_class, val_per_class);
            return py::make_tuple(p.train, p.validation, p.test);
        },
        py::arg("labels"), py::arg("seed"), py::arg("train_per_class") = 50, py::arg("val_per_class") = 15,
        "Per-class seeded split; returns (train, validation, test) index lists.");
}
