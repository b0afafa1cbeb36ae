#pragma once

// Discrete-time leaky integrate-and-fire layer with filtered spike traces,
// surrogate derivative and per-presynaptic eligibility traces.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace dreamnet {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct NeuronConfig {
    std::size_t n_neurons = 500;
    double dt = 1.0;         // ms
    double tau_m = 1.0;      // membrane
    double tau_s = 2.0;      // filtered spikes feeding the recurrence
    double tau_star = 3.0;   // readout trace
    double v_th = 0.0;
    double v_rest = -4.0;
    double w_res_magnitude = 20.0;  // post-spike decrement
    double delta_v = 0.3;           // surrogate width

    void validate() const;

    double membrane_decay() const;
    double spike_filter_decay() const;
    double readout_decay() const;
};

struct NeuronLayerState {
    Vector v;
    Vector s;      // {0,1}
    Vector s_hat;  // filtered spikes, recurrent drive
    Vector s_bar;  // readout trace

    bool operator==(const NeuronLayerState&) const = default;
};

struct EligibilityState {
    Vector e;  // one trace per presynaptic neuron, shared across rows
    Vector p;  // pseudo-derivative per postsynaptic neuron

    bool operator==(const EligibilityState&) const = default;
};

struct NetworkParams {
    Matrix w_rec;                       // N x N, w_rec(i, j) from j to i
    std::vector<Matrix> input_weights;  // one N x D_h matrix per input stream

    std::size_t size() const { return static_cast<std::size_t>(w_rec.rows()); }

    // I_i = sum over streams of W_h * drive_h.
    void project_inputs(std::span<const Vector> drives, Vector& current) const;
    Vector project_inputs(std::span<const Vector> drives) const;

    bool operator==(const NetworkParams&) const = default;
};

// Input weights ~ N(0, sigma_in[h]^2); recurrent weights ~ N(0, (sigma_rec / sqrt(N))^2).
NetworkParams init_network(const NeuronConfig& config, std::uint64_t rng_seed,
                           std::span<const std::size_t> input_dims,
                           std::span<const double> sigma_in, double sigma_rec);

// One update of the layer. Order: s_hat absorbs the current spikes, the
// membrane leaks toward (W s_hat + I + v_rest) and is decremented by
// w_res_magnitude where s = 1, new spikes are thresholded, s_bar absorbs them.
NeuronLayerState step_layer(const NeuronLayerState& state, const NetworkParams& params,
                            const Vector& external_current, const NeuronConfig& config);
void step_layer_in_place(NeuronLayerState& state, const NetworkParams& params,
                         const Vector& external_current, const NeuronConfig& config);

double pseudo_derivative(double v, double delta_v);
Vector pseudo_derivative(const Vector& v, const NeuronConfig& config);

// e <- exp(-dt/tau_m) e + (1 - exp(-dt/tau_m)) s_hat
EligibilityState update_eligibility(const EligibilityState& elig, const Vector& s_hat,
                                    const NeuronConfig& config);
void update_eligibility_in_place(EligibilityState& elig, const Vector& s_hat,
                                 const NeuronConfig& config);

std::pair<NeuronLayerState, EligibilityState> reset_episode_state(const NeuronConfig& config);

// A layer together with its live state and traces.
struct SpikingModule {
    NeuronConfig config;
    NetworkParams params;
    NeuronLayerState state;
    EligibilityState elig;

    SpikingModule() = default;
    SpikingModule(NeuronConfig cfg, NetworkParams p);

    void reset();
    // Advances the layer one step and refreshes e (from the s_hat that drove
    // the membrane) and p (at the new membrane potential).
    void step(const Vector& external_current);
};

}  // namespace dreamnet
