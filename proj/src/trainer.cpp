#include "dreamnet/trainer.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <utility>

namespace dreamnet {

namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL + (stream + 1) * 0xD1B54A32D192ED03ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

enum Stream : std::uint64_t { AgentInit, ModelInit, Pixels, Env, Actions, Dreams };

}  // namespace

std::string_view to_string(Mode mode) {
    switch (mode) {
        case Mode::Baseline: return "baseline";
        case Mode::Dream: return "dream";
        case Mode::Plan: return "plan";
        case Mode::SleepOnly: return "sleep-only";
        case Mode::FreezeModel: return "freeze-model";
    }
    return "?";
}

Mode parse_mode(std::string_view text) {
    for (Mode m : {Mode::Baseline, Mode::Dream, Mode::Plan, Mode::SleepOnly, Mode::FreezeModel})
        if (to_string(m) == text) return m;
    throw ConfigError("unknown mode '" + std::string(text) + "'");
}

std::string_view to_string(ObsMode mode) { return mode == ObsMode::Coords ? "coords" : "pixels"; }

ObsMode parse_obs_mode(std::string_view text) {
    if (text == "coords") return ObsMode::Coords;
    if (text == "pixels") return ObsMode::Pixels;
    throw ConfigError("unknown observation mode '" + std::string(text) + "'");
}

std::size_t TrainerConfig::simulated_steps_per_iteration() const {
    switch (mode) {
        case Mode::Baseline: return 0;
        case Mode::Plan: {
            if (n_fut == 0) return 0;
            const std::size_t period = planning_period();
            return ((awake_T + period - 1) / period) * n_fut;
        }
        default: return dream_T;
    }
}

void TrainerConfig::validate() const {
    agent_neurons.validate();
    model_neurons.validate();
    pong.validate();
    if (awake_T == 0) throw ConfigError("awake_T must be positive");
    if (awake_T > pong.horizon) throw ConfigError("awake_T exceeds the environment horizon");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
    if (sigma_rec < 0.0 || sigma_in_agent < 0.0 || sigma_in_action < 0.0 || sigma_in_state < 0.0)
        throw ConfigError("weight scales must be non-negative");
    if (obs == ObsMode::Pixels && pixel_dim == 0) throw ConfigError("pixel_dim must be positive");
    if (mode == Mode::Plan && n_fut > 0) {
        if (planning_period() != 2 * n_fut)
            throw ConfigError("planning requires dt_pred = 2 * n_fut");
        if (awake_T % planning_period() != 0)
            throw ConfigError("awake_T must be a multiple of dt_pred for a matched simulation budget");
    }
    if (mode == Mode::FreezeModel && freeze_at > n_iter)
        throw ConfigError("freeze_at exceeds n_iter");
}

void AgentModule::begin_episode() {
    net.reset();
    traces.clear();
}

std::size_t AgentModule::act(const Vector& xi, Rng& rng) {
    net.step(net.params.input_weights[0] * xi);
    pi = policy_probs(net.state.s_bar, readout);
    return sample_action(pi, rng);
}

void AgentModule::learn(std::size_t action, double reward) {
    accumulate_policy_gradients(action, pi, net.elig.p, net.elig.e, net.state.s_bar, reward, traces,
                                readout, grads);
}

void AgentModule::apply_gradients() {
    // Buffers hold ascent directions; Adam descends.
    const Matrix neg_w = -grads.w_rec;
    const Matrix neg_r = -grads.r_pi;
    adam_step(adam_w, net.params.w_rec, neg_w);
    adam_step(adam_r, readout.r_pi, neg_r);
    grads.clear();
}

void ModelModule::begin_episode() { net.reset(); }

WorldObservation ModelModule::predict(std::size_t action, const Vector& xi) {
    const auto& w = net.params.input_weights;
    Vector current = w[0].col(static_cast<Eigen::Index>(action));
    current.noalias() += w[1] * xi;
    net.step(current);
    return model_predict(net.state.s_bar, readouts);
}

void ModelModule::learn(const WorldObservation& prediction, const WorldObservation& target) {
    accumulate_model_gradients(target.xi - prediction.xi, target.reward - prediction.reward,
                               net.state.s_bar, net.elig.p, net.elig.e, readouts, loss, grads);
}

void ModelModule::apply_gradients() {
    const Matrix neg_w = -grads.w_rec;
    const Matrix neg_xi = -grads.r_xi;
    const Vector neg_r = -grads.r_r;
    adam_step(adam_w, net.params.w_rec, neg_w);
    adam_step(adam_xi, readouts.r_xi, neg_xi);
    adam_step(adam_r, readouts.r_r, neg_r);
    grads.clear();
}

Trainer::Trainer(TrainerConfig config, std::uint64_t seed)
    : config_(std::move(config)),
      env_rng_(derive_seed(seed, Env)),
      action_rng_(derive_seed(seed, Actions)),
      dream_rng_(derive_seed(seed, Dreams)) {
    config_.validate();
    if (config_.obs == ObsMode::Pixels)
        observer_ = Observer(config_.pong, config_.pixel_dim, config_.pixel_sigma,
                             derive_seed(seed, Pixels));
    const std::size_t dim = observer_.dim();
    const std::size_t k = kPongActions;

    {
        const std::array<std::size_t, 1> dims{dim};
        const std::array<double, 1> sigmas{config_.sigma_in_agent};
        const auto& nc = config_.agent_neurons;
        agent_.net = SpikingModule(
            nc, init_network(nc, derive_seed(seed, AgentInit), dims, sigmas, config_.sigma_rec));
        agent_.readout.r_pi = Matrix::Zero(static_cast<Eigen::Index>(k),
                                           static_cast<Eigen::Index>(nc.n_neurons));
        agent_.traces = PolicyState::zeros(k, nc.n_neurons, config_.gamma);
        agent_.grads = PolicyGradients::zeros(k, nc.n_neurons);
        agent_.adam_w = AdamState(nc.n_neurons * nc.n_neurons, config_.agent_adam);
        agent_.adam_r = AdamState(k * nc.n_neurons, config_.agent_adam);
    }
    {
        const std::array<std::size_t, 2> dims{k, dim};
        const std::array<double, 2> sigmas{config_.sigma_in_action, config_.sigma_in_state};
        const auto& nc = config_.model_neurons;
        model_.net = SpikingModule(
            nc, init_network(nc, derive_seed(seed, ModelInit), dims, sigmas, config_.sigma_rec));
        model_.readouts = ModelReadouts::zeros(dim, nc.n_neurons);
        model_.grads = ModelGradients::zeros(dim, nc.n_neurons);
        model_.loss = config_.loss;
        model_.adam_w = AdamState(nc.n_neurons * nc.n_neurons, config_.model_adam);
        model_.adam_xi = AdamState(dim * nc.n_neurons, config_.model_adam);
        model_.adam_r = AdamState(nc.n_neurons, config_.model_adam);
    }
}

bool Trainer::model_updates_enabled() const {
    return config_.mode != Mode::FreezeModel || iteration_ <= config_.freeze_at;
}

AwakeStats Trainer::run_awake_episode(bool policy_learning, bool model_learning) {
    events_.push_back(Phase::Awake);
    AwakeStats stats;
    env_state_ = env_reset(config_.pong, env_rng_);
    Vector xi = observe(env_state_);
    agent_.begin_episode();
    model_.begin_episode();

    const bool planning = config_.mode == Mode::Plan && config_.n_fut > 0 && policy_learning;
    const std::size_t period = config_.planning_period();

    for (std::size_t t = 0; t < config_.awake_T; ++t) {
        if (planning && t % period == 0) {
            stats.planned_reward += run_planning_rollout(xi);
            stats.planned_steps += config_.n_fut;
        }

        const std::size_t action = agent_.act(xi, action_rng_);
        PongStep step = env_step(env_state_, action, config_.pong);
        ++env_interactions_;
        if (step_hook_) step_hook_(iteration_, t, step.state);
        stats.reward += step.reward;
        if (policy_learning) agent_.learn(action, step.reward);

        const WorldObservation prediction = model_.predict(action, xi);
        WorldObservation target{observe(step.state), step.reward};
        const Vector err = target.xi - prediction.xi;
        const double err_r = target.reward - prediction.reward;
        stats.loss_xi += err.squaredNorm() / static_cast<double>(err.size());
        stats.loss_r += err_r * err_r;
        if (model_learning) model_.learn(prediction, target);

        env_state_ = step.state;
        xi = std::move(target.xi);
    }
    stats.loss_xi /= static_cast<double>(config_.awake_T);
    stats.loss_r /= static_cast<double>(config_.awake_T);

    if (policy_learning) agent_.apply_gradients();
    if (model_learning) model_.apply_gradients();
    return stats;
}

double Trainer::run_planning_rollout(const Vector& xi_real) {
    const NeuronLayerState agent_state = agent_.net.state;
    const EligibilityState agent_elig = agent_.net.elig;
    const Vector agent_pi = agent_.pi;
    const NeuronLayerState model_state = model_.net.state;
    const EligibilityState model_elig = model_.net.elig;
    PolicyState live_traces = std::exchange(
        agent_.traces,
        PolicyState::zeros(kPongActions, agent_.net.config.n_neurons, config_.gamma));

    double total = 0.0;
    Vector xi = xi_real;
    for (std::size_t j = 0; j < config_.n_fut; ++j) {
        const std::size_t action = agent_.act(xi, action_rng_);
        WorldObservation predicted = model_.predict(action, xi);
        double reward = predicted.reward;
        if (config_.clip_dream_reward) reward = std::clamp(reward, -1.0, 1.0);
        agent_.learn(action, reward);
        total += reward;
        xi = std::move(predicted.xi);
    }

    agent_.net.state = agent_state;
    agent_.net.elig = agent_elig;
    agent_.pi = agent_pi;
    agent_.traces = std::move(live_traces);
    model_.net.state = model_state;
    model_.net.elig = model_elig;
    return total;
}

double Trainer::run_dream_episode() {
    events_.push_back(Phase::Dream);
    Vector xi = observe(random_pong_state(config_.pong, dream_rng_));
    agent_.begin_episode();
    model_.begin_episode();

    double total = 0.0;
    for (std::size_t t = 0; t < config_.dream_T; ++t) {
        const std::size_t action = agent_.act(xi, action_rng_);
        WorldObservation predicted = model_.predict(action, xi);
        double reward = predicted.reward;
        if (config_.clip_dream_reward) reward = std::clamp(reward, -1.0, 1.0);
        agent_.learn(action, reward);
        total += reward;
        xi = std::move(predicted.xi);
    }
    agent_.apply_gradients();
    return total;
}

TrainRecord Trainer::run_iteration() {
    const auto start = std::chrono::steady_clock::now();
    ++iteration_;
    TrainRecord rec;
    rec.iteration = iteration_;

    const bool awake_policy = config_.mode != Mode::SleepOnly;
    const AwakeStats awake = run_awake_episode(awake_policy, model_updates_enabled());
    rec.episode_reward = awake.reward;
    rec.model_loss_xi = awake.loss_xi;
    rec.model_loss_r = awake.loss_r;
    rec.dream_reward = awake.planned_reward;

    switch (config_.mode) {
        case Mode::Dream:
        case Mode::SleepOnly:
        case Mode::FreezeModel: rec.dream_reward = run_dream_episode(); break;
        default: break;
    }

    rec.env_interactions = env_interactions_;
    if (config_.record_timing)
        rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                          .count();
    return rec;
}

std::vector<TrainRecord> Trainer::train() {
    std::vector<TrainRecord> records;
    records.reserve(config_.n_iter);
    while (iteration_ < config_.n_iter) records.push_back(run_iteration());
    return records;
}

std::vector<TrainRecord> train(const TrainerConfig& config, std::uint64_t seed) {
    return Trainer(config, seed).train();
}

}  // namespace dreamnet
