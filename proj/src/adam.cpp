#include "dreamnet/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace dreamnet {

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grad) {
    if (params.size() != grad.size() || state.m.size() != params.size() ||
        state.v.size() != params.size())
        throw std::invalid_argument("adam_step: shape mismatch");

    const auto& h = state.hyper;
    ++state.step_count;
    const double t = static_cast<double>(state.step_count);
    const double bc1 = 1.0 - std::pow(h.beta1, t);
    const double bc2 = 1.0 - std::pow(h.beta2, t);

    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grad[i];
        state.m[i] = h.beta1 * state.m[i] + (1.0 - h.beta1) * g;
        state.v[i] = h.beta2 * state.v[i] + (1.0 - h.beta2) * g * g;
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        params[i] -= h.lr * m_hat / (std::sqrt(v_hat) + h.epsilon);
    }
}

}  // namespace dreamnet
