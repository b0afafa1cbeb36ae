#pragma once

// MiniPong: a small deterministic Pong-like game on the unit square. The agent
// paddle sits on the left, a speed-capped tracking opponent on the right. The
// ball is always served from the center toward the agent, and after every
// point it waits at the center for serve_delay steps before the next serve.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "dreamnet/neuron.hpp"
#include "dreamnet/world_model.hpp"

namespace dreamnet {

enum class PongAction : std::size_t { Up = 0, Stay = 1, Down = 2 };
inline constexpr std::size_t kPongActions = 3;
inline constexpr std::size_t kPongStateDim = 4;  // ball x, ball y, agent y, opponent y

struct PongConfig {
    std::size_t horizon = 100;
    double agent_x = 0.05;
    double opponent_x = 0.95;
    double paddle_half = 0.1;
    double ball_radius = 0.01;
    double ball_speed = 0.025;
    double agent_speed = 0.04;
    double opponent_speed = 0.02;
    double opponent_gain = 0.1;          // proportional tracking gain before the cap
    double max_serve_angle_deg = 45.0;   // serves stay at least 45 deg off vertical
    double max_bounce_angle_deg = 60.0;  // paddle hit at the edge
    std::size_t serve_delay = 25;
    std::size_t frame_width = 80;
    std::size_t frame_height = 105;

    void validate() const;
};

struct PongState {
    double ball_x = 0.5;
    double ball_y = 0.5;
    double ball_vx = 0.0;
    double ball_vy = 0.0;
    double agent_y = 0.5;
    double opponent_y = 0.5;
    std::size_t step = 0;
    int agent_score = 0;
    int opponent_score = 0;
    std::size_t serve_timer = 0;
    std::uint64_t rng_state = 0;  // drives serve directions

    bool operator==(const PongState&) const = default;
};

class EpisodeFinished : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

struct PongStep {
    PongState state;
    WorldObservation obs;
    double reward = 0.0;
};

Vector pong_coordinates(const PongState& state);

PongState env_reset(const PongConfig& config, std::mt19937_64& rng);
WorldObservation env_observe(const PongState& state);

// Throws EpisodeFinished when state.step >= config.horizon.
PongStep env_step(const PongState& state, std::size_t action, const PongConfig& config);

// A state with uniformly random ball/paddle coordinates (paddles kept inside the field).
PongState random_pong_state(const PongConfig& config, std::mt19937_64& rng);

struct Frame {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;  // row-major, row 0 at the top, values 0 or 1

    std::uint8_t at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }
    std::size_t count_on() const;
    bool operator==(const Frame&) const = default;
};

Frame render_frame(const PongState& state, const PongConfig& config);
void write_pgm(const Frame& frame, const std::filesystem::path& path);

// F ~ N(0, sigma^2), D x P.
Matrix make_pixel_projection(std::size_t dim, std::size_t n_pixels, double sigma,
                             std::uint64_t seed);
Vector pixel_project(const Frame& frame, const Matrix& projection);

// Picks the observation vector fed to the networks: raw coordinates, or a
// fixed random projection of the rendered frame.
class Observer {
public:
    Observer() = default;  // coordinates
    Observer(const PongConfig& config, std::size_t dim, double sigma, std::uint64_t seed);

    bool uses_pixels() const { return projection_.size() > 0; }
    std::size_t dim() const;
    Vector operator()(const PongState& state, const PongConfig& config) const;

private:
    Matrix projection_;
};

}  // namespace dreamnet
