#include <rotordiag/nn/gradcheck.hpp>
#include <rotordiag/nn/layers.hpp>
#include <rotordiag/rng.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <variant>

namespace rotordiag::nn {

namespace {

struct Probe {
    std::size_t layer; // parametric layer index
    bool is_bias;
    std::size_t index;
};

std::vector<Probe> choose_probes(const ModelParams& params, const GradCheckOptions& options) {
    std::vector<Probe> probes;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const std::size_t nw = params.layers[l].weights.size();
        const std::size_t total = nw + params.layers[l].bias.size();
        std::vector<std::size_t> order(total);
        std::iota(order.begin(), order.end(), std::size_t{0});
        const std::size_t take = std::min(total, options.samples_per_layer);
        if (take < total) {
            // partial Fisher-Yates: the first `take` slots are a uniform sample
            Rng rng(derive_seed(options.seed, l));
            for (std::size_t i = 0; i < take; ++i)
                std::swap(order[i], order[i + rng.below(total - i)]);
        }
        for (std::size_t i = 0; i < take; ++i) {
            const std::size_t k = order[i];
            probes.push_back(k < nw ? Probe{l, false, k} : Probe{l, true, k - nw});
        }
    }
    return probes;
}

// Loss from layer `first` onward plus the routing of every non-smooth layer:
// the sign of each ReLU input and the winner of each max-pool window.
struct Evaluation {
    double loss = 0.0;
    std::vector<std::uint8_t> relu_signs;
    std::vector<std::size_t> winners;

    bool same_routing(const Evaluation& o) const { return relu_signs == o.relu_signs && winners == o.winners; }
};

Evaluation evaluate_from(const ModelSpec& spec, const BasicParams<double>& params, std::size_t first,
                         const BasicTensor<double>& activation, std::size_t label) {
    Evaluation ev;
    BasicTensor<double> x = activation;
    std::size_t p = 0;
    for (std::size_t i = 0; i < first; ++i)
        p += is_parametric(spec.layers[i]) ? 1 : 0;
    for (std::size_t i = first; i < spec.layers.size(); ++i) {
        const Layer& l = spec.layers[i];
        if (const auto* c = std::get_if<Conv>(&l)) {
            const auto& lp = params.layers[p++];
            x = conv2d_forward(x, lp.weights, lp.bias, c->stride);
        } else if (std::holds_alternative<ReLU>(l)) {
            for (double v : x.values())
                ev.relu_signs.push_back(v > 0.0 ? 1 : 0);
            x = relu(x);
        } else if (const auto* m = std::get_if<MaxPool>(&l)) {
            auto r = maxpool(x, m->size);
            ev.winners.insert(ev.winners.end(), r.argmax.begin(), r.argmax.end());
            x = std::move(r.output);
        } else if (const auto* a = std::get_if<AvgPool>(&l)) {
            x = avgpool(x, a->size);
        } else if (std::holds_alternative<Flatten>(l)) {
            x = x.reshaped({x.size()});
        } else if (std::holds_alternative<Dense>(l)) {
            const auto& lp = params.layers[p++];
            x = dense_forward(x, lp.weights, lp.bias);
        } else {
            x = softmax(x);
        }
    }
    ev.loss = cross_entropy(x, label);
    return ev;
}

} // namespace

GradCheckReport grad_check(const ModelSpec& spec, const ModelParams& params, const Tensor& input,
                           std::size_t label, const GradCheckOptions& options) {
    require(options.epsilon >= 1e-4 && options.epsilon <= 1e-2, Errc::InvalidArgument,
            "grad_check: epsilon must lie in [1e-4, 1e-2]");
    require(options.min_epsilon > 0.0 && options.min_epsilon <= options.epsilon, Errc::InvalidArgument,
            "grad_check: min_epsilon must lie in (0, epsilon]");
    check_params(spec, params);

    GradCheckReport report;
    if (params.count() == 0)
        return report;

    const auto fwd = forward(spec, params, input);
    const Gradients analytic = backward(spec, params, fwd.cache, label);

    // Double-precision copies; a probe only needs layers from its own onward.
    BasicParams<double> dparams = params.cast<double>();
    const auto dfwd = forward(spec, dparams, input.cast<double>());
    const auto pidx = spec.parametric_layers();

    std::vector<std::optional<Evaluation>> base(spec.layers.size());
    for (const Probe& probe : choose_probes(params, options)) {
        const auto& src = params.layers[probe.layer];
        const float theta = probe.is_bias ? src.bias[probe.index] : src.weights[probe.index];
        auto& dlayer = dparams.layers[probe.layer];
        double& slot = probe.is_bias ? dlayer.bias[probe.index] : dlayer.weights[probe.index];

        const std::size_t start = pidx[probe.layer];
        const auto& activation = dfwd.cache.inputs[start];
        if (!base[start])
            base[start] = evaluate_from(spec, dparams, start, activation, label);

        // A difference taken across a kink says nothing about the gradient,
        // so shrink the step until both sides keep the base routing.
        std::optional<double> numeric;
        for (double eps = options.epsilon; eps >= options.min_epsilon * 0.999; eps *= 0.1) {
            const float plus = static_cast<float>(theta + eps);
            const float minus = static_cast<float>(theta - eps);
            if (plus == minus)
                break;
            slot = plus;
            const Evaluation hi = evaluate_from(spec, dparams, start, activation, label);
            slot = minus;
            const Evaluation lo = evaluate_from(spec, dparams, start, activation, label);
            slot = theta;
            if (hi.same_routing(*base[start]) && lo.same_routing(*base[start])) {
                numeric = (hi.loss - lo.loss) / (static_cast<double>(plus) - static_cast<double>(minus));
                if (eps < options.epsilon)
                    ++report.refined;
                break;
            }
        }
        slot = theta;
        if (!numeric) {
            ++report.kinked;
            continue;
        }

        const auto& g = analytic.layers[probe.layer];
        const double exact = probe.is_bias ? g.bias[probe.index] : g.weights[probe.index];
        const double denom = std::max({std::abs(exact), std::abs(*numeric), 1e-8});
        report.errors.push_back(std::abs(exact - *numeric) / denom);
    }

    report.checked = report.errors.size();
    if (report.errors.empty())
        return report;
    report.max_relative_error = *std::max_element(report.errors.begin(), report.errors.end());
    std::vector<double> sorted = report.errors;
    const std::size_t mid = sorted.size() / 2;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(mid), sorted.end());
    report.median_relative_error = sorted[mid];
    if (sorted.size() % 2 == 0) {
        const double lower = *std::max_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(mid));
        report.median_relative_error = 0.5 * (lower + sorted[mid]);
    }
    return report;
}

} // namespace rotordiag::nn
