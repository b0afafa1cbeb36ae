#include "dreamnet/agent.hpp"

#include <cmath>
#include <stdexcept>

namespace dreamnet {

PolicyState PolicyState::zeros(std::size_t n_actions, std::size_t n_neurons, double gamma) {
    const auto k = static_cast<Eigen::Index>(n_actions);
    const auto n = static_cast<Eigen::Index>(n_neurons);
    return {Matrix::Zero(n, n), Matrix::Zero(k, n), gamma};
}

void PolicyState::clear() {
    z_w.setZero();
    z_r.setZero();
}

PolicyGradients PolicyGradients::zeros(std::size_t n_actions, std::size_t n_neurons) {
    const auto k = static_cast<Eigen::Index>(n_actions);
    const auto n = static_cast<Eigen::Index>(n_neurons);
    return {Matrix::Zero(n, n), Matrix::Zero(k, n)};
}

void PolicyGradients::clear() {
    w_rec.setZero();
    r_pi.setZero();
}

PolicyGradients& PolicyGradients::operator+=(const PolicyGradients& other) {
    w_rec += other.w_rec;
    r_pi += other.r_pi;
    return *this;
}

Vector policy_logits(const Vector& s_bar, const PolicyReadout& readout) {
    return readout.r_pi * s_bar;
}

Vector softmax(const Vector& logits) {
    const double top = logits.maxCoeff();
    Vector out = (logits.array() - top).exp().matrix();
    out /= out.sum();
    return out;
}

Vector policy_probs(const Vector& s_bar, const PolicyReadout& readout) {
    return softmax(policy_logits(s_bar, readout));
}

std::size_t sample_action(const Vector& pi, Rng& rng) {
    if (pi.size() == 0) throw std::invalid_argument("sample_action: empty distribution");
    if ((pi.array() < 0.0).any() || !pi.allFinite() || std::abs(pi.sum() - 1.0) > 1e-9)
        throw std::invalid_argument("sample_action: pi is not normalized");
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    double cumulative = 0.0;
    std::size_t last_positive = 0;
    for (Eigen::Index k = 0; k < pi.size(); ++k) {
        if (pi[k] <= 0.0) continue;
        cumulative += pi[k];
        last_positive = static_cast<std::size_t>(k);
        if (u < cumulative) return last_positive;
    }
    return last_positive;
}

std::vector<double> compute_return(std::span<const double> rewards, double gamma) {
    std::vector<double> out(rewards.size(), 0.0);
    double running = 0.0;
    for (std::size_t t = rewards.size(); t-- > 0;) {
        running = rewards[t] + gamma * running;
        out[t] = running;
    }
    return out;
}

void accumulate_policy_gradients(std::size_t action, const Vector& pi, const Vector& p,
                                 const Vector& e, const Vector& s_bar, double reward,
                                 PolicyState& state, const PolicyReadout& readout,
                                 PolicyGradients& grads) {
    const auto k = static_cast<Eigen::Index>(action);
    if (k >= pi.size()) throw std::invalid_argument("action out of range");

    Vector score = -pi;
    score[k] += 1.0;

    const Vector post = (readout.r_pi.transpose() * score).cwiseProduct(p);
    const double gamma = state.gamma;
    for (Eigen::Index j = 0; j < state.z_w.cols(); ++j)
        state.z_w.col(j) = gamma * state.z_w.col(j) + e[j] * post;
    state.z_r = gamma * state.z_r + score * s_bar.transpose();

    if (reward != 0.0) {
        grads.w_rec += reward * state.z_w;
        grads.r_pi += reward * state.z_r;
    }
}

}  // namespace dreamnet
