#pragma once

// Awake / dream / planning orchestration for the two spiking modules.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dreamnet/adam.hpp"
#include "dreamnet/agent.hpp"
#include "dreamnet/minipong.hpp"
#include "dreamnet/neuron.hpp"
#include "dreamnet/world_model.hpp"

namespace dreamnet {

enum class Mode { Baseline, Dream, Plan, SleepOnly, FreezeModel };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view text);  // throws ConfigError

enum class ObsMode { Coords, Pixels };

std::string_view to_string(ObsMode mode);
ObsMode parse_obs_mode(std::string_view text);

struct TrainerConfig {
    Mode mode = Mode::Baseline;
    std::size_t n_iter = 100;
    std::size_t awake_T = 100;
    std::size_t dream_T = 50;
    std::size_t n_fut = 0;
    std::size_t dt_pred = 0;     // 0 means 2 * n_fut
    std::size_t freeze_at = 0;   // freeze-model: last iteration (1-based) that updates the model
    double gamma = 0.99;
    bool clip_dream_reward = false;
    bool record_timing = false;  // wall_ms stays 0 otherwise, keeping output reproducible

    NeuronConfig agent_neurons;
    NeuronConfig model_neurons;
    double sigma_in_agent = 5.0;
    double sigma_in_action = 5.0;
    double sigma_in_state = 5.0;
    double sigma_rec = 1.0;
    AdamHyper agent_adam;
    AdamHyper model_adam;
    ModelLossConfig loss;

    PongConfig pong;
    ObsMode obs = ObsMode::Coords;
    std::size_t pixel_dim = 4;
    double pixel_sigma = 0.1;

    std::size_t planning_period() const { return dt_pred == 0 ? 2 * n_fut : dt_pred; }
    // Simulated steps fed to the policy per iteration (dream_T, or the planning total).
    std::size_t simulated_steps_per_iteration() const;
    void validate() const;
};

struct TrainRecord {
    std::size_t iteration = 0;         // 1-based
    std::uint64_t env_interactions = 0;
    double episode_reward = 0.0;
    double dream_reward = 0.0;         // summed simulated reward (dreams or rollouts)
    double model_loss_xi = 0.0;        // mean over steps of the per-component squared error
    double model_loss_r = 0.0;         // mean over steps of the squared reward error
    double wall_ms = 0.0;

    bool operator==(const TrainRecord&) const = default;
};

enum class Phase { Awake, Dream };

// The agent network, its policy readout, traces, gradient buffers and optimizers.
struct AgentModule {
    SpikingModule net;
    PolicyReadout readout;
    PolicyState traces;
    PolicyGradients grads;
    AdamState adam_w;
    AdamState adam_r;
    Vector pi;

    void begin_episode();
    std::size_t act(const Vector& xi, Rng& rng);
    void learn(std::size_t action, double reward);
    void apply_gradients();
};

// The model network, its readouts, gradient buffers and optimizers.
struct ModelModule {
    SpikingModule net;
    ModelReadouts readouts;
    ModelGradients grads;
    ModelLossConfig loss;
    AdamState adam_w;
    AdamState adam_xi;
    AdamState adam_r;

    void begin_episode();
    WorldObservation predict(std::size_t action, const Vector& xi);
    void learn(const WorldObservation& prediction, const WorldObservation& target);
    void apply_gradients();
};

struct AwakeStats {
    double reward = 0.0;
    double planned_reward = 0.0;
    std::size_t planned_steps = 0;
    double loss_xi = 0.0;
    double loss_r = 0.0;
};

class Trainer {
public:
    Trainer(TrainerConfig config, std::uint64_t seed);

    // One iteration as dictated by the mode.
    TrainRecord run_iteration();
    std::vector<TrainRecord> train();

    AwakeStats run_awake_episode(bool policy_learning, bool model_learning);
    double run_dream_episode();
    // Branches n_fut simulated steps from the live networks, adds the policy
    // contributions to the agent's buffers and restores the live state.
    double run_planning_rollout(const Vector& xi);

    // Called after every real environment step with (iteration, t, new state).
    using StepHook = std::function<void(std::size_t, std::size_t, const PongState&)>;
    void set_step_hook(StepHook hook) { step_hook_ = std::move(hook); }

    const TrainerConfig& config() const { return config_; }
    const AgentModule& agent() const { return agent_; }
    const ModelModule& model() const { return model_; }
    AgentModule& agent() { return agent_; }
    ModelModule& model() { return model_; }
    const PongState& env_state() const { return env_state_; }
    std::uint64_t env_interactions() const { return env_interactions_; }
    std::size_t iteration() const { return iteration_; }
    const std::vector<Phase>& events() const { return events_; }

private:
    Vector observe(const PongState& state) const { return observer_(state, config_.pong); }
    bool model_updates_enabled() const;

    TrainerConfig config_;
    Observer observer_;
    AgentModule agent_;
    ModelModule model_;
    Rng env_rng_;
    Rng action_rng_;
    Rng dream_rng_;
    PongState env_state_;
    std::uint64_t env_interactions_ = 0;
    std::size_t iteration_ = 0;
    std::vector<Phase> events_;
    StepHook step_hook_;
};

std::vector<TrainRecord> train(const TrainerConfig& config, std::uint64_t seed);

}  // namespace dreamnet
