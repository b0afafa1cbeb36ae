#include "dreamnet/neuron.hpp"

#include <cmath>
#include <random>
#include <string>

namespace dreamnet {

void NeuronConfig::validate() const {
    if (n_neurons == 0) throw ConfigError("n_neurons must be positive");
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (!(tau_m > 0.0) || !(tau_s > 0.0) || !(tau_star > 0.0))
        throw ConfigError("time constants must be positive");
    if (!(delta_v > 0.0)) throw ConfigError("delta_v must be positive");
    if (!(v_rest < v_th)) throw ConfigError("v_rest must lie below v_th");
}

double NeuronConfig::membrane_decay() const { return std::exp(-dt / tau_m); }
double NeuronConfig::spike_filter_decay() const { return std::exp(-dt / tau_s); }
double NeuronConfig::readout_decay() const { return std::exp(-dt / tau_star); }

void NetworkParams::project_inputs(std::span<const Vector> drives, Vector& current) const {
    if (drives.size() != input_weights.size())
        throw ConfigError("expected " + std::to_string(input_weights.size()) +
                          " input streams, got " + std::to_string(drives.size()));
    current.setZero(w_rec.rows());
    for (std::size_t h = 0; h < drives.size(); ++h) {
        if (drives[h].size() != input_weights[h].cols())
            throw ConfigError("input stream " + std::to_string(h) + " has wrong dimension");
        current.noalias() += input_weights[h] * drives[h];
    }
}

Vector NetworkParams::project_inputs(std::span<const Vector> drives) const {
    Vector current;
    project_inputs(drives, current);
    return current;
}

NetworkParams init_network(const NeuronConfig& config, std::uint64_t rng_seed,
                           std::span<const std::size_t> input_dims,
                           std::span<const double> sigma_in, double sigma_rec) {
    config.validate();
    if (input_dims.size() != sigma_in.size())
        throw ConfigError("one sigma per input stream is required");
    for (auto d : input_dims)
        if (d == 0) throw ConfigError("input dimensions must be positive");
    if (sigma_rec < 0.0) throw ConfigError("sigma_rec must be non-negative");

    const auto n = static_cast<Eigen::Index>(config.n_neurons);
    std::mt19937_64 rng(rng_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    NetworkParams params;
    params.input_weights.reserve(input_dims.size());
    for (std::size_t h = 0; h < input_dims.size(); ++h) {
        if (sigma_in[h] < 0.0) throw ConfigError("input sigma must be non-negative");
        Matrix w(n, static_cast<Eigen::Index>(input_dims[h]));
        for (Eigen::Index c = 0; c < w.cols(); ++c)
            for (Eigen::Index r = 0; r < n; ++r) w(r, c) = sigma_in[h] * gauss(rng);
        params.input_weights.push_back(std::move(w));
    }

    params.w_rec.resize(n, n);
    const double scale = sigma_rec / std::sqrt(static_cast<double>(n));
    for (Eigen::Index c = 0; c < n; ++c)
        for (Eigen::Index r = 0; r < n; ++r) params.w_rec(r, c) = scale * gauss(rng);
    if (sigma_rec == 0.0) params.w_rec.setZero();  // avoid -0.0 entries
    return params;
}

void step_layer_in_place(NeuronLayerState& state, const NetworkParams& params,
                         const Vector& external_current, const NeuronConfig& config) {
    const auto n = state.v.size();
    if (external_current.size() != n || params.w_rec.rows() != n)
        throw ConfigError("layer size mismatch in step_layer");
    if (!external_current.allFinite()) throw NumericError("non-finite input current");

    const double a_s = config.spike_filter_decay();
    const double a_m = config.membrane_decay();
    const double a_r = config.readout_decay();

    state.s_hat = a_s * state.s_hat + (1.0 - a_s) * state.s;

    Vector drive = external_current;
    drive.noalias() += params.w_rec * state.s_hat;
    drive.array() += config.v_rest;
    state.v = a_m * state.v + (1.0 - a_m) * drive - config.w_res_magnitude * state.s;

    for (Eigen::Index i = 0; i < n; ++i) state.s[i] = state.v[i] >= config.v_th ? 1.0 : 0.0;
    state.s_bar = a_r * state.s_bar + (1.0 - a_r) * state.s;
}

NeuronLayerState step_layer(const NeuronLayerState& state, const NetworkParams& params,
                            const Vector& external_current, const NeuronConfig& config) {
    NeuronLayerState next = state;
    step_layer_in_place(next, params, external_current, config);
    return next;
}

double pseudo_derivative(double v, double delta_v) {
    // exp(x) / (1 + exp(x))^2 is even in x; factor out exp(-|x|) so it never overflows.
    const double q = std::exp(-std::abs(v / delta_v));
    return q / (delta_v * (1.0 + q) * (1.0 + q));
}

Vector pseudo_derivative(const Vector& v, const NeuronConfig& config) {
    Vector p(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) p[i] = pseudo_derivative(v[i], config.delta_v);
    return p;
}

void update_eligibility_in_place(EligibilityState& elig, const Vector& s_hat,
                                 const NeuronConfig& config) {
    const double a_m = config.membrane_decay();
    elig.e = a_m * elig.e + (1.0 - a_m) * s_hat;
}

EligibilityState update_eligibility(const EligibilityState& elig, const Vector& s_hat,
                                    const NeuronConfig& config) {
    EligibilityState next = elig;
    update_eligibility_in_place(next, s_hat, config);
    return next;
}

std::pair<NeuronLayerState, EligibilityState> reset_episode_state(const NeuronConfig& config) {
    const auto n = static_cast<Eigen::Index>(config.n_neurons);
    NeuronLayerState state{Vector::Constant(n, config.v_rest), Vector::Zero(n), Vector::Zero(n),
                           Vector::Zero(n)};
    EligibilityState elig{Vector::Zero(n),
                          Vector::Constant(n, pseudo_derivative(config.v_rest, config.delta_v))};
    return {std::move(state), std::move(elig)};
}

SpikingModule::SpikingModule(NeuronConfig cfg, NetworkParams p)
    : config(cfg), params(std::move(p)) {
    config.validate();
    if (params.size() != config.n_neurons) throw ConfigError("params do not match n_neurons");
    reset();
}

void SpikingModule::reset() {
    auto [s, e] = reset_episode_state(config);
    state = std::move(s);
    elig = std::move(e);
}

void SpikingModule::step(const Vector& external_current) {
    step_layer_in_place(state, params, external_current, config);
    update_eligibility_in_place(elig, state.s_hat, config);
    for (Eigen::Index i = 0; i < state.v.size(); ++i)
        elig.p[i] = pseudo_derivative(state.v[i], config.delta_v);
}

}  // namespace dreamnet
