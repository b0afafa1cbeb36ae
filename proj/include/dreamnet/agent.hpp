#pragma once

// Softmax policy read out of the agent network and its online policy-gradient rule.

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "dreamnet/neuron.hpp"

namespace dreamnet {

using Rng = std::mt19937_64;

struct PolicyReadout {
    Matrix r_pi;  // K x N

    std::size_t n_actions() const { return static_cast<std::size_t>(r_pi.rows()); }
    bool operator==(const PolicyReadout&) const = default;
};

// Running gamma-discounted traces of the policy score function. z_w holds
// sum_k R_pi(k, i) z_{k,ij}, which is valid because R_pi only changes between
// episodes; z_r holds the K x N readout traces.
struct PolicyState {
    Matrix z_w;
    Matrix z_r;
    double gamma = 0.99;

    static PolicyState zeros(std::size_t n_actions, std::size_t n_neurons, double gamma);
    void clear();
};

// Ascent directions of the expected return.
struct PolicyGradients {
    Matrix w_rec;  // N x N
    Matrix r_pi;   // K x N

    static PolicyGradients zeros(std::size_t n_actions, std::size_t n_neurons);
    void clear();
    PolicyGradients& operator+=(const PolicyGradients& other);
};

Vector policy_logits(const Vector& s_bar, const PolicyReadout& readout);
Vector softmax(const Vector& logits);
Vector policy_probs(const Vector& s_bar, const PolicyReadout& readout);

// Throws std::invalid_argument unless pi is a probability vector (sum within 1e-9).
std::size_t sample_action(const Vector& pi, Rng& rng);

std::vector<double> compute_return(std::span<const double> rewards, double gamma);

// One step of the online rule: the traces decay by gamma and absorb
// (1[a=k] - pi_k) times (p_i e_j | s_bar_i); then reward times the traces is
// added to the gradient buffers.
void accumulate_policy_gradients(std::size_t action, const Vector& pi, const Vector& p,
                                 const Vector& e, const Vector& s_bar, double reward,
                                 PolicyState& state, const PolicyReadout& readout,
                                 PolicyGradients& grads);

}  // namespace dreamnet
