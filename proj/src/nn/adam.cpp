#include "petition/adam.hpp"

#include <cmath>

#include "petition/errors.hpp"

namespace petition::nn {

AdamState::AdamState(std::span<const Parameter> params, AdamConfig cfg) : config(cfg) {
    first_moment.reserve(params.size());
    second_moment.reserve(params.size());
    for (const auto &p : params) {
        first_moment.emplace_back(p.value.shape());
        second_moment.emplace_back(p.value.shape());
    }
}

void adam_step(std::span<Parameter> params, std::span<const Tensor> grads, AdamState &state) {
    if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
        throw ValidationError("adam_step: parameter, gradient and state counts differ");
    }
    for (std::size_t p = 0; p < params.size(); ++p) {
        if (params[p].value.shape() != grads[p].shape() || grads[p].shape() != state.first_moment[p].shape()) {
            throw ValidationError("adam_step: shape mismatch for '" + params[p].name + "'");
        }
        if (!grads[p].all_finite()) {
            throw TrainingError("non-finite gradient for parameter '" + params[p].name + "'");
        }
    }

    ++state.step;
    const AdamConfig &c = state.config;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(c.beta1, t);
    const double correction2 = 1.0 - std::pow(c.beta2, t);
    for (std::size_t p = 0; p < params.size(); ++p) {
        auto theta = params[p].value.data();
        const auto g = grads[p].data();
        auto m = state.first_moment[p].data();
        auto v = state.second_moment[p].data();
        for (std::size_t i = 0; i < theta.size(); ++i) {
            m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
            v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
            const double m_hat = m[i] / correction1;
            const double v_hat = v[i] / correction2;
            theta[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.epsilon);
        }
    }
}

}  // namespace petition::nn
