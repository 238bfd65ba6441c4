#include "wesnet/optimizer.hpp"

#include <cmath>
#include <string>

#include "wesnet/errors.hpp"

namespace wesnet {

namespace {

void check_finite(const std::vector<double>& values, std::size_t layer, const char* tensor) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i]))
            throw NumericalError("non-finite gradient in layer " + std::to_string(layer) + " tensor " + tensor +
                                 " at flat index " + std::to_string(i));
    }
}

struct Corrections {
    double first;
    double second;
};

void update(std::vector<double>& param, const std::vector<double>& grad, std::vector<double>& m,
            std::vector<double>& v, const AdamState& s, Corrections c) {
    for (std::size_t i = 0; i < param.size(); ++i) {
        const double g = grad[i];
        m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g;
        v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g * g;
        const double m_hat = m[i] / c.first;
        const double v_hat = v[i] / c.second;
        param[i] -= s.lr * m_hat / (std::sqrt(v_hat) + s.epsilon);
    }
}

}  // namespace

AdamState AdamState::for_params(const NetworkParams& params, double lr) {
    AdamState s;
    s.lr = lr;
    s.first_moment = NetworkGradients::zeros_like(params);
    s.second_moment = NetworkGradients::zeros_like(params);
    return s;
}

void adam_step(AdamState& state, NetworkParams& params, const NetworkGradients& grads) {
    if (grads.layers.size() != params.num_layers() || state.first_moment.layers.size() != params.num_layers() ||
        state.second_moment.layers.size() != params.num_layers())
        throw ContractError("adam_step: gradient or moment buffers do not match the parameters");

    for (std::size_t r = 0; r < grads.layers.size(); ++r) {
        const auto& g = grads.layers[r];
        check_finite(g.w1.data, r, "W1");
        check_finite(g.b1, r, "b1");
        check_finite(g.w2.data, r, "W2");
        check_finite(g.b2, r, "b2");
        check_finite(g.w3.data, r, "W3");
        check_finite(g.b3, r, "b3");
        check_finite(g.beta, r, "beta");
    }

    ++state.step;
    const double t = static_cast<double>(state.step);
    const Corrections c{1.0 - std::pow(state.beta1, t), 1.0 - std::pow(state.beta2, t)};
    const bool beta_trainable = params.config().beta_trainable();

    for (std::size_t r = 0; r < params.num_layers(); ++r) {
        LayerParams& p = params.mutable_layer(r);
        const auto& g = grads.layers[r];
        auto& m = state.first_moment.layers[r];
        auto& v = state.second_moment.layers[r];
        update(p.w1.data, g.w1.data, m.w1.data, v.w1.data, state, c);
        update(p.b1, g.b1, m.b1, v.b1, state, c);
        update(p.w2.data, g.w2.data, m.w2.data, v.w2.data, state, c);
        update(p.b2, g.b2, m.b2, v.b2, state, c);
        update(p.w3.data, g.w3.data, m.w3.data, v.w3.data, state, c);
        update(p.b3, g.b3, m.b3, v.b3, state, c);
        if (beta_trainable) {
            update(p.beta.values, g.beta, m.beta, v.beta, state, c);
            p.beta.values = project_monotone_unit(p.beta.values);
            p.beta = effective_profile(p.beta, p.beta.keep_fraction);
            if (!satisfies_profile_invariants(p.beta))
                throw NumericalError("adam_step: profile invariants violated after projection in layer " +
                                     std::to_string(r));
        }
    }
}

}  // namespace wesnet
