#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace dreamnet {

struct AdamHyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    bool operator==(const AdamHyper&) const = default;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t step_count = 0;
    AdamHyper hyper;

    AdamState() = default;
    AdamState(std::size_t n, AdamHyper h = {}) : m(n, 0.0), v(n, 0.0), hyper(h) {}

    bool operator==(const AdamState&) const = default;
};

// Bias-corrected Adam descent step: params -= lr * m_hat / (sqrt(v_hat) + eps).
// Throws std::invalid_argument when the three sizes disagree.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grad);

template <typename Derived, typename GradDerived>
void adam_step(AdamState& state, Eigen::PlainObjectBase<Derived>& params,
               const Eigen::PlainObjectBase<GradDerived>& grad) {
    adam_step(state, std::span<double>(params.data(), static_cast<std::size_t>(params.size())),
              std::span<const double>(grad.data(), static_cast<std::size_t>(grad.size())));
}

}  // namespace dreamnet
