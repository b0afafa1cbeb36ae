// Monte-Carlo statistics of MiniPong under a uniform random policy and a few
// scripted policies. Usage: pong_stats [episodes] [key=value ...], where the
// keys are the environment keys accepted by the dreamnet config parser.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <random>
#include <vector>

#include <string_view>

#include "dreamnet/experiment.hpp"
#include "dreamnet/minipong.hpp"

using namespace dreamnet;

namespace {

struct Tally {
    std::vector<double> totals;
    std::map<int, int> histogram;
    int max_agent = 0;
    int max_opponent = 0;
};

template <typename Policy>
Tally play(const PongConfig& cfg, int episodes, Policy policy) {
    Tally tally;
    for (int ep = 0; ep < episodes; ++ep) {
        std::mt19937_64 rng(static_cast<std::uint64_t>(ep));
        PongState s = env_reset(cfg, rng);
        double total = 0.0;
        for (std::size_t t = 0; t < cfg.horizon; ++t) {
            auto step = env_step(s, policy(s, rng), cfg);
            total += step.reward;
            s = step.state;
        }
        tally.totals.push_back(total);
        ++tally.histogram[static_cast<int>(total)];
        tally.max_agent = std::max(tally.max_agent, s.agent_score);
        tally.max_opponent = std::max(tally.max_opponent, s.opponent_score);
    }
    return tally;
}

void report(const char* name, Tally t) {
    double mean = 0.0;
    for (double x : t.totals) mean += x;
    mean /= static_cast<double>(t.totals.size());
    std::sort(t.totals.begin(), t.totals.end());
    const double median = t.totals[t.totals.size() / 2];
    std::printf("%-8s mean %+.3f median %+.1f  max agent %d  max opponent %d  |", name, mean, median,
                t.max_agent, t.max_opponent);
    for (auto [k, n] : t.histogram) std::printf("  %+d:%d", k, n);
    std::printf("\n");
}

}  // namespace

int main(int argc, char** argv) {
    const int episodes = argc > 1 ? std::atoi(argv[1]) : 1000;
    RunConfig run;
    try {
        for (int i = 2; i < argc; ++i) {
            const std::string_view arg = argv[i];
            const auto eq = arg.find('=');
            if (eq == std::string_view::npos) throw ConfigError("expected key=value, got " + std::string(arg));
            apply_config_value(run, arg.substr(0, eq), arg.substr(eq + 1));
        }
        run.trainer.pong.validate();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "pong_stats: %s\n", e.what());
        return 2;
    }
    const PongConfig cfg = run.trainer.pong;
    const double dead = 0.5 * cfg.agent_speed;

    auto follow = [dead](double target, double y) -> std::size_t {
        if (target - y > dead) return 0;
        if (target - y < -dead) return 2;
        return 1;
    };
    report("random", play(cfg, episodes, [](const PongState&, std::mt19937_64& rng) {
               return static_cast<std::size_t>(std::uniform_int_distribution<int>(0, 2)(rng));
           }));
    report("tracker", play(cfg, episodes, [&](const PongState& s, std::mt19937_64&) {
               return follow(s.ball_y, s.agent_y);
           }));
    report("aimer", play(cfg, episodes, [&](const PongState& s, std::mt19937_64&) {
               // Meet the ball with the paddle edge that sends it away from the opponent.
               const double edge = (s.opponent_y > 0.5 ? -0.85 : 0.85) * cfg.paddle_half;
               return follow(s.ball_vx < 0.0 ? s.ball_y - edge : s.ball_y, s.agent_y);
           }));
    report("idle", play(cfg, episodes, [](const PongState&, std::mt19937_64&) -> std::size_t { return 1; }));
    return 0;
}
