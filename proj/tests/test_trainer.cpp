#include "doctest.h"

#include <array>
#include <cmath>
#include <numeric>
#include <vector>

#include "dreamnet/trainer.hpp"

using namespace dreamnet;

namespace {

TrainerConfig small_config(Mode mode, std::size_t iters) {
    TrainerConfig c;
    c.mode = mode;
    c.n_iter = iters;
    c.agent_neurons.n_neurons = 40;
    c.model_neurons.n_neurons = 40;
    if (mode == Mode::Plan) c.n_fut = 1;
    if (mode == Mode::FreezeModel) c.freeze_at = iters / 2;
    return c;
}

bool same_model(const ModelModule& a, const ModelModule& b) {
    return a.net.params == b.net.params && a.readouts == b.readouts;
}

bool same_agent(const AgentModule& a, const AgentModule& b) {
    return a.net.params == b.net.params && a.readout == b.readout;
}

}  // namespace

TEST_CASE("every iteration costs exactly one real episode") {
    for (Mode m : {Mode::Baseline, Mode::Dream, Mode::Plan, Mode::SleepOnly, Mode::FreezeModel}) {
        CAPTURE(to_string(m));
        Trainer tr(small_config(m, 4), 3);
        for (std::uint64_t n = 1; n <= 4; ++n) {
            const TrainRecord rec = tr.run_iteration();
            CHECK(rec.iteration == n);
            CHECK(rec.env_interactions == n * 100);
            CHECK(tr.env_interactions() == n * 100);
        }
    }
}

TEST_CASE("the event log follows the mode schedule") {
    Trainer dream(small_config(Mode::Dream, 3), 1);
    dream.train();
    CHECK(dream.events() == std::vector<Phase>{Phase::Awake, Phase::Dream, Phase::Awake, Phase::Dream,
                                               Phase::Awake, Phase::Dream});
    Trainer base(small_config(Mode::Baseline, 3), 1);
    base.train();
    CHECK(base.events() == std::vector<Phase>(3, Phase::Awake));
    Trainer plan(small_config(Mode::Plan, 2), 1);
    plan.train();
    CHECK(plan.events() == std::vector<Phase>(2, Phase::Awake));
}

TEST_CASE("zero learning rates freeze every parameter") {
    TrainerConfig c = small_config(Mode::Dream, 3);
    c.agent_adam.lr = 0.0;
    c.model_adam.lr = 0.0;
    Trainer tr(c, 2);
    const AgentModule agent0 = tr.agent();
    const ModelModule model0 = tr.model();
    tr.train();
    CHECK(same_agent(tr.agent(), agent0));
    CHECK(same_model(tr.model(), model0));
}

TEST_CASE("dreams leave the model, the environment and the counter untouched") {
    Trainer tr(small_config(Mode::Dream, 5), 4);
    tr.run_iteration();
    const ModelModule model0 = tr.model();
    const AgentModule agent0 = tr.agent();
    const PongState env0 = tr.env_state();
    const auto count0 = tr.env_interactions();
    for (int i = 0; i < 3; ++i) tr.run_dream_episode();
    CHECK(same_model(tr.model(), model0));
    CHECK(tr.model().adam_w == model0.adam_w);
    CHECK(tr.env_state() == env0);
    CHECK(tr.env_interactions() == count0);
    CHECK_FALSE(same_agent(tr.agent(), agent0));
}

TEST_CASE("freeze-model stops model updates after freeze_at") {
    TrainerConfig c = small_config(Mode::FreezeModel, 6);
    c.freeze_at = 2;
    Trainer tr(c, 5);
    ModelModule prev = tr.model();
    for (std::size_t it = 1; it <= 6; ++it) {
        tr.run_iteration();
        if (it <= 2)
            CHECK_FALSE(same_model(tr.model(), prev));
        else
            CHECK(same_model(tr.model(), prev));
        prev = tr.model();
    }
}

TEST_CASE("sleep-only trains the policy in dreams only") {
    Trainer tr(small_config(Mode::SleepOnly, 3), 6);
    for (int i = 0; i < 3; ++i) {
        const AgentModule before = tr.agent();
        const ModelModule model_before = tr.model();
        tr.run_awake_episode(false, true);
        CHECK(same_agent(tr.agent(), before));
        CHECK_FALSE(same_model(tr.model(), model_before));
        tr.run_dream_episode();
        // an untrained reward readout predicts exactly zero reward, so nothing to learn yet
        CHECK(same_agent(tr.agent(), before) == tr.model().readouts.r_r.isZero(0.0));
    }
    for (int i = 0; i < 20; ++i) tr.run_iteration();
    const AgentModule before = tr.agent();
    tr.run_dream_episode();
    CHECK_FALSE(same_agent(tr.agent(), before));
}

TEST_CASE("planning rollouts are isolated and match the dream budget") {
    Trainer tr(small_config(Mode::Plan, 2), 7);
    tr.run_iteration();

    // mid-episode live state
    tr.agent().begin_episode();
    tr.model().begin_episode();
    const Vector xi = Vector::Constant(4, 0.3);
    Rng rng(1);
    for (int t = 0; t < 5; ++t) {
        tr.agent().act(xi, rng);
        tr.model().predict(1, xi);
    }
    const AgentModule agent0 = tr.agent();
    const ModelModule model0 = tr.model();
    const PongState env0 = tr.env_state();
    tr.run_planning_rollout(xi);
    CHECK(tr.agent().net.state == agent0.net.state);
    CHECK(tr.agent().net.elig == agent0.net.elig);
    CHECK(tr.agent().net.params == agent0.net.params);
    CHECK(tr.agent().traces.z_w == agent0.traces.z_w);
    CHECK(tr.agent().traces.z_r == agent0.traces.z_r);
    CHECK(tr.agent().pi == agent0.pi);
    CHECK(tr.model().net.state == model0.net.state);
    CHECK(tr.model().net.elig == model0.net.elig);
    CHECK(same_model(tr.model(), model0));
    CHECK(tr.env_state() == env0);

    const AwakeStats stats = tr.run_awake_episode(true, true);
    CHECK(stats.planned_steps == 50);
    CHECK(tr.config().simulated_steps_per_iteration() == 50);
    CHECK(tr.env_interactions() == 200);
}

TEST_CASE("planning with n_fut = 0 reproduces the baseline exactly") {
    TrainerConfig plan = small_config(Mode::Plan, 5);
    plan.n_fut = 0;
    const auto a = train(plan, 11);
    const auto b = train(small_config(Mode::Baseline, 5), 11);
    CHECK(a == b);
}

TEST_CASE("runs are reproducible for a fixed seed") {
    for (Mode m : {Mode::Baseline, Mode::Dream, Mode::Plan}) {
        CAPTURE(to_string(m));
        const auto a = train(small_config(m, 4), 21);
        const auto b = train(small_config(m, 4), 21);
        const auto c = train(small_config(m, 4), 22);
        CHECK(a == b);
        CHECK_FALSE(a == c);
    }
    TrainerConfig pix = small_config(Mode::Dream, 2);
    pix.obs = ObsMode::Pixels;
    CHECK(train(pix, 3) == train(pix, 3));
}

TEST_CASE("invalid trainer configurations are rejected") {
    TrainerConfig c = small_config(Mode::Plan, 2);
    c.n_fut = 3;
    c.dt_pred = 6;  // 100 is not a multiple of 6
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.dt_pred = 4;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = small_config(Mode::FreezeModel, 2);
    c.freeze_at = 3;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = small_config(Mode::Baseline, 2);
    c.awake_T = 101;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK_THROWS_AS(parse_mode("nap"), ConfigError);
    CHECK(parse_mode("sleep-only") == Mode::SleepOnly);
}

TEST_CASE("model prediction error falls during awake training") {
    TrainerConfig c = small_config(Mode::Baseline, 200);
    c.model_neurons.n_neurons = 100;
    c.model_neurons.tau_m = 1.0;
    c.model_neurons.tau_s = 2.0;
    c.model_neurons.tau_star = 3.0;
    const auto rec = train(c, 1);
    double first = 0.0, last = 0.0;
    for (std::size_t i = 0; i < 20; ++i) {
        first += rec[i].model_loss_xi;
        last += rec[rec.size() - 1 - i].model_loss_xi;
    }
    CHECK(last < 0.5 * first);
}

TEST_CASE("a constant world is learned by the model module") {
    TrainerConfig c = small_config(Mode::Baseline, 1);
    Trainer tr(c, 9);
    ModelModule& m = tr.model();
    const Vector xi = Vector::Constant(4, 0.4);
    const WorldObservation target{Vector::Constant(4, 0.7), -0.3};
    std::vector<double> errors;
    for (int ep = 0; ep < 300; ++ep) {
        m.begin_episode();
        double err = 0.0;
        for (int t = 0; t < 20; ++t) {
            const WorldObservation pred = m.predict(static_cast<std::size_t>(t % 3), xi);
            err += (target.xi - pred.xi).squaredNorm();
            m.learn(pred, target);
        }
        m.apply_gradients();
        errors.push_back(err);
    }
    const double early = std::accumulate(errors.begin(), errors.begin() + 20, 0.0);
    const double late = std::accumulate(errors.end() - 20, errors.end(), 0.0);
    CHECK(late < 0.1 * early);
}

TEST_CASE("with a perfect world model, dream and awake updates coincide") {
    // Toy 1-D world: xi' = xi + 0.05 (a - 1), r = -|xi - 0.5| on the move.
    // Inputs near 1 keep the small network spiking.
    // The "model" below is exact, so the dream replays the awake episode.
    TrainerConfig c = small_config(Mode::Dream, 1);
    Trainer tr(c, 13);
    AgentModule awake = tr.agent();
    AgentModule dream = tr.agent();

    auto world = [](const Vector& xi, std::size_t a) {
        Vector next = xi;
        next(0) += 0.05 * (static_cast<double>(a) - 1.0);
        return WorldObservation{next, -std::abs(next(0) - 0.5)};
    };
    auto perfect_model = [&world](const Vector& xi, std::size_t a) { return world(xi, a); };

    auto run = [](AgentModule& agent, auto&& step_fn) {
        Rng rng(99);
        agent.begin_episode();
        Vector xi = Vector::Constant(4, 0.9);
        for (int t = 0; t < 30; ++t) {
            const std::size_t a = agent.act(xi, rng);
            const WorldObservation next = step_fn(xi, a);
            agent.learn(a, next.reward);
            xi = next.xi;
        }
    };
    run(awake, world);
    run(dream, perfect_model);
    const double scale = std::max(1.0, awake.grads.w_rec.cwiseAbs().maxCoeff());
    CHECK((awake.grads.w_rec - dream.grads.w_rec).cwiseAbs().maxCoeff() <= 1e-10 * scale);
    CHECK((awake.grads.r_pi - dream.grads.r_pi).cwiseAbs().maxCoeff() <= 1e-10 * scale);
    CHECK(awake.grads.r_pi.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("the step hook sees every real step") {
    Trainer tr(small_config(Mode::Dream, 2), 4);
    std::size_t calls = 0;
    tr.set_step_hook([&](std::size_t, std::size_t t, const PongState& s) {
        CHECK(s.step == t + 1);
        ++calls;
    });
    tr.train();
    CHECK(calls == 200);
}
