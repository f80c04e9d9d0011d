#pragma once

#include <rotordiag/nn/model.hpp>

#include <cstdint>
#include <vector>

namespace rotordiag::nn {

struct GradCheckOptions {
    double epsilon = 1e-3;
    /// Parameters probed per parametric layer; layers with fewer are checked
    /// exhaustively.
    std::size_t samples_per_layer = 256;
    std::uint64_t seed = 0;
    /// Smallest step tried when the nominal one crosses a ReLU or max-pool kink.
    double min_epsilon = 1e-7;
};

struct GradCheckReport {
    double max_relative_error = 0.0;
    double median_relative_error = 0.0;
    std::size_t checked = 0;
    std::size_t refined = 0; // needed a step below epsilon to avoid a kink
    std::size_t kinked = 0;  // still crossed a kink at min_epsilon; excluded
    std::vector<double> errors; // one per probed parameter, in probe order
};

/// Compares backward() against central differences
///   (L(theta + eps) - L(theta - eps)) / (theta+ - theta-)
/// where the perturbed parameter is rounded to float like the model stores
/// it, and L is evaluated in double precision. The relative error of one
/// parameter is |g - g_fd| / max(|g|, |g_fd|, 1e-8).
///
/// A difference is accepted only if both perturbed evaluations keep every
/// ReLU sign and max-pool winner of the unperturbed one; otherwise the step
/// is divided by 10 down to min_epsilon. Probes that never qualify are
/// counted in `kinked` and left out of the statistics.
GradCheckReport grad_check(const ModelSpec& spec, const ModelParams& params, const Tensor& input,
                           std::size_t label, const GradCheckOptions& options = {});

} // namespace rotordiag::nn
