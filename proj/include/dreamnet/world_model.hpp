#pragma once

// Linear readouts of the model network and the online rule that trains them
// (and the model's recurrent weights) to predict the next observation and reward.

#include <cstddef>
#include <span>
#include <vector>

#include "dreamnet/neuron.hpp"

namespace dreamnet {

struct WorldObservation {
    Vector xi;
    double reward = 0.0;

    bool operator==(const WorldObservation&) const = default;
};

struct ModelReadouts {
    Matrix r_xi;  // D x N
    Vector r_r;   // N

    static ModelReadouts zeros(std::size_t dim, std::size_t n_neurons);
    bool operator==(const ModelReadouts&) const = default;
};

struct ModelLossConfig {
    double c_xi = 1.0;
    double c_r = 0.1;
};

// Ascent directions, i.e. -1/2 dE/dtheta, summed over the steps of an episode.
struct ModelGradients {
    Matrix w_rec;  // N x N
    Matrix r_xi;   // D x N
    Vector r_r;    // N

    static ModelGradients zeros(std::size_t dim, std::size_t n_neurons);
    void clear();
};

WorldObservation model_predict(const Vector& s_bar, const ModelReadouts& readouts);

// c_xi * sum_{t,k} (xi*_k - xi_k)^2 + c_r * sum_t (r* - r)^2
double model_loss(std::span<const WorldObservation> predictions,
                  std::span<const WorldObservation> targets, const ModelLossConfig& cfg);

// Per-neuron learning signal c_xi * sum_k R_xi(k, i) err_k + c_r * R_r(i) err_r.
Vector model_learning_signal(const Vector& error_xi, double error_r,
                             const ModelReadouts& readouts, const ModelLossConfig& cfg);

// Adds one step's contribution. error_* are target minus prediction for the
// prediction read from s_bar; p and e come from the same network update that
// produced s_bar.
void accumulate_model_gradients(const Vector& error_xi, double error_r, const Vector& s_bar,
                                const Vector& p, const Vector& e, const ModelReadouts& readouts,
                                const ModelLossConfig& cfg, ModelGradients& grads);

}  // namespace dreamnet
