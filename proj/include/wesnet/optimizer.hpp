#pragma once

#include <cstdint>

#include "wesnet/network.hpp"

namespace wesnet {

struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t step = 0;
    NetworkGradients first_moment;
    NetworkGradients second_moment;

    static AdamState for_params(const NetworkParams& params, double lr = 1e-3);
};

/// One bias-corrected Adam update of every weight and bias, and of the profile
/// coefficients when they are trainable. Updated coefficients are projected back
/// onto monotone [0, 1] sequences and re-masked at the keep cutoff.
///
/// Throws NumericalError naming the layer and tensor if a gradient is non-finite;
/// nothing is modified in that case.
void adam_step(AdamState& state, NetworkParams& params, const NetworkGradients& grads);

}  // namespace wesnet
