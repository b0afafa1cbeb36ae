#include "doctest.h"

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "dreamnet/neuron.hpp"
#include "oracles.hpp"

using namespace dreamnet;

namespace {

double rel_err(double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1.0});
    return std::abs(a - b) / scale;
}

NeuronConfig small_config(std::size_t n) {
    NeuronConfig c;
    c.n_neurons = n;
    return c;
}

}  // namespace

TEST_CASE("step_layer and eligibility match the naive oracle over 20 random steps") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        NeuronConfig cfg = small_config(6);
        cfg.tau_m = 1.0 + 20.0 * std::uniform_real_distribution<double>(0, 1)(rng);
        cfg.tau_s = 1.0 + 10.0 * std::uniform_real_distribution<double>(0, 1)(rng);
        cfg.tau_star = 1.0 + 20.0 * std::uniform_real_distribution<double>(0, 1)(rng);
        const std::array<std::size_t, 1> dims{1};
        const std::array<double, 1> sig{1.0};
        SpikingModule mod(cfg, init_network(cfg, 100 + trial, dims, sig, 3.0));

        oracle::Lif o{cfg.n_neurons, cfg.dt, cfg.tau_m, cfg.tau_s, cfg.tau_star, cfg.v_th,
                      cfg.v_rest, cfg.w_res_magnitude, cfg.delta_v, {}, {}, {}, {}, {}, {}, {}};
        o.w.assign(6, std::vector<double>(6));
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) o.w[i][j] = mod.params.w_rec(i, j);
        o.reset();
        mod.reset();

        for (int t = 0; t < 20; ++t) {
            Vector cur(6);
            std::vector<double> cur_o(6);
            for (int i = 0; i < 6; ++i) cur_o[i] = cur(i) = 6.0 * g(rng);
            mod.step(cur);
            o.step(cur_o);
            for (int i = 0; i < 6; ++i) {
                CHECK(rel_err(mod.state.v(i), o.v[i]) <= 1e-10);
                CHECK(mod.state.s(i) == o.s[i]);
                CHECK(rel_err(mod.state.s_hat(i), o.s_hat[i]) <= 1e-10);
                CHECK(rel_err(mod.state.s_bar(i), o.s_bar[i]) <= 1e-10);
                CHECK(rel_err(mod.elig.e(i), o.e[i]) <= 1e-10);
                CHECK(rel_err(mod.elig.p(i), o.p[i]) <= 1e-10);
            }
        }
    }
}

TEST_CASE("a constant suprathreshold current spikes after the expected delay and resets") {
    NeuronConfig cfg = small_config(1);
    cfg.tau_m = 20.0;
    NetworkParams params;
    params.w_rec = Matrix::Zero(1, 1);
    auto [state, elig] = reset_episode_state(cfg);
    Vector cur = Vector::Constant(1, 10.0);

    // v_n = v_rest + I (1 - alpha^n) crosses 0 first at n = 11 for tau_m = 20, I = 10.
    int first = -1;
    double before = 0.0;
    for (int n = 1; n <= 40 && first < 0; ++n) {
        before = state.v(0);
        state = step_layer(state, params, cur, cfg);
        if (state.s(0) == 1.0) first = n;
    }
    CHECK(first == 11);
    const double v_spike = state.v(0);
    CHECK(v_spike >= 0.0);
    CHECK(before < 0.0);

    const double alpha = std::exp(-1.0 / 20.0);
    state = step_layer(state, params, cur, cfg);
    const double no_reset = alpha * v_spike + (1.0 - alpha) * (10.0 + cfg.v_rest);
    CHECK(no_reset - state.v(0) == doctest::Approx(20.0).epsilon(1e-12));
    CHECK(state.s(0) == 0.0);
}

TEST_CASE("spikes are exactly binary at the threshold boundary") {
    NeuronConfig cfg = small_config(1);
    cfg.tau_m = 1.0;
    NetworkParams params;
    params.w_rec = Matrix::Zero(1, 1);
    auto [state, elig] = reset_episode_state(cfg);
    // lands on threshold from v_rest up to rounding
    const double current = -cfg.v_rest / (1.0 - std::exp(-1.0));
    Vector cur = Vector::Constant(1, current);
    state = step_layer(state, params, cur, cfg);
    CHECK(std::abs(state.v(0) - cfg.v_th) < 1e-12);
    CHECK((state.s(0) == 0.0 || state.s(0) == 1.0));
}

TEST_CASE("pseudo-derivative analytic properties") {
    for (double dv : {0.1, 0.3, 1.0, 2.5}) {
        CHECK(pseudo_derivative(0.0, dv) == 1.0 / (4.0 * dv));
        for (double v : {0.01, 0.2, 0.7, 3.0, 11.0}) {
            CHECK(pseudo_derivative(v, dv) == pseudo_derivative(-v, dv));
            CHECK(pseudo_derivative(v, dv) < 1.0 / (4.0 * dv));
            CHECK(pseudo_derivative(v, dv) > 0.0);
        }
        CHECK(pseudo_derivative(1e6, dv) == 0.0);
        CHECK(pseudo_derivative(-1e6, dv) == 0.0);
        CHECK(std::isfinite(pseudo_derivative(800.0 * dv, dv)));
    }
}

TEST_CASE("eligibility trace equals its closed-form geometric sum") {
    NeuronConfig cfg = small_config(3);
    cfg.tau_m = 7.0;
    const double decay = std::exp(-cfg.dt / cfg.tau_m);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    EligibilityState elig{Vector::Constant(3, 0.4), Vector::Zero(3)};
    std::vector<std::vector<double>> seq(3);
    for (int t = 0; t < 20; ++t) {
        Vector sh(3);
        for (int i = 0; i < 3; ++i) seq[i].push_back(sh(i) = u(rng));
        elig = update_eligibility(elig, sh, cfg);
    }
    for (int i = 0; i < 3; ++i)
        CHECK(rel_err(elig.e(i), oracle::eligibility_closed_form(0.4, seq[i], decay)) <= 1e-10);
}

TEST_CASE("episode reset leaves no trace of previous activity") {
    NeuronConfig cfg = small_config(8);
    const std::array<std::size_t, 1> dims{2};
    const std::array<double, 1> sig{5.0};
    SpikingModule mod(cfg, init_network(cfg, 1, dims, sig, 1.0));
    SpikingModule fresh = mod;
    Vector drive = Vector::Constant(2, 1.0);
    for (int t = 0; t < 30; ++t) mod.step(mod.params.project_inputs(std::span(&drive, 1)));
    mod.reset();
    fresh.reset();
    CHECK(mod.state == fresh.state);
    CHECK(mod.elig == fresh.elig);
    CHECK((mod.state.v.array() == cfg.v_rest).all());
    CHECK(mod.state.s.isZero(0.0));
    CHECK(mod.state.s_hat.isZero(0.0));
    CHECK(mod.state.s_bar.isZero(0.0));
    CHECK(mod.elig.e.isZero(0.0));
}

TEST_CASE("initialization is deterministic and has the requested spread") {
    NeuronConfig cfg = small_config(400);
    const std::array<std::size_t, 2> dims{3, 4};
    const std::array<double, 2> sig{5.0, 2.0};
    const auto a = init_network(cfg, 42, dims, sig, 1.0);
    const auto b = init_network(cfg, 42, dims, sig, 1.0);
    const auto c = init_network(cfg, 43, dims, sig, 1.0);
    CHECK(a == b);
    CHECK_FALSE(a == c);

    auto sd = [](const Matrix& m) {
        const double mean = m.mean();
        return std::sqrt((m.array() - mean).square().sum() / static_cast<double>(m.size() - 1));
    };
    CHECK(sd(a.w_rec) == doctest::Approx(1.0 / 20.0).epsilon(0.05));
    CHECK(sd(a.input_weights[0]) == doctest::Approx(5.0).epsilon(0.05));
    CHECK(sd(a.input_weights[1]) == doctest::Approx(2.0).epsilon(0.05));
    CHECK(a.input_weights[0].rows() == 400);
    CHECK(a.input_weights[1].cols() == 4);

    const auto z = init_network(cfg, 42, dims, sig, 0.0);
    CHECK(z.w_rec.isZero(0.0));
}

TEST_CASE("invalid configurations are rejected") {
    NeuronConfig cfg;
    cfg.tau_m = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = NeuronConfig{};
    cfg.delta_v = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = NeuronConfig{};
    cfg.n_neurons = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    NeuronConfig ok = small_config(2);
    NetworkParams params;
    params.w_rec = Matrix::Zero(2, 2);
    auto [state, elig] = reset_episode_state(ok);
    Vector bad(2);
    bad << 1.0, std::nan("");
    CHECK_THROWS_AS(step_layer(state, params, bad, ok), NumericError);
}
