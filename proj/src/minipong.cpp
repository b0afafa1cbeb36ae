#include "dreamnet/minipong.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace dreamnet {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double unit_uniform(std::uint64_t& state) {
    return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
}

double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }

// Ball at the center, velocity pointing toward the agent.
void serve(PongState& s, const PongConfig& c) {
    const double angle = deg2rad(c.max_serve_angle_deg) * (2.0 * unit_uniform(s.rng_state) - 1.0);
    s.ball_x = 0.5;
    s.ball_y = 0.5;
    s.ball_vx = -c.ball_speed * std::cos(angle);
    s.ball_vy = c.ball_speed * std::sin(angle);
}

void reflect_walls(double& y, double& vy) {
    if (y < 0.0) {
        y = -y;
        vy = -vy;
    } else if (y > 1.0) {
        y = 2.0 - y;
        vy = -vy;
    }
}

// Resolves a crossing of the paddle plane at x = plane during the move
// (x, y) -> (nx, ny). Returns true and rewrites the move on a hit.
// outgoing is +1 for the agent paddle (ball leaves to the right), -1 for the opponent.
bool paddle_bounce(double plane, double paddle_y, double outgoing, double x, double y,
                   double& nx, double& ny, double& vx, double& vy, const PongConfig& c) {
    const bool crossing = outgoing > 0.0 ? (x >= plane && nx < plane) : (x <= plane && nx > plane);
    if (!crossing) return false;
    const double frac = (plane - x) / (nx - x);
    const double y_cross = std::clamp(y + frac * (ny - y), 0.0, 1.0);
    const double reach = c.paddle_half + c.ball_radius;
    const double offset = y_cross - paddle_y;
    if (std::abs(offset) > reach) return false;

    const double angle = deg2rad(c.max_bounce_angle_deg) * (offset / reach);
    vx = outgoing * c.ball_speed * std::cos(angle);
    vy = c.ball_speed * std::sin(angle);
    nx = plane + (1.0 - frac) * vx;
    ny = y_cross + (1.0 - frac) * vy;
    reflect_walls(ny, vy);
    return true;
}

std::size_t to_index(double u, std::size_t extent) {
    const double scaled = std::floor(u * static_cast<double>(extent));
    return static_cast<std::size_t>(std::clamp(scaled, 0.0, static_cast<double>(extent - 1)));
}

}  // namespace

void PongConfig::validate() const {
    if (horizon == 0) throw ConfigError("horizon must be positive");
    if (!(ball_speed > 0.0) || !(agent_speed > 0.0) || opponent_speed < 0.0)
        throw ConfigError("speeds must be positive");
    if (!(paddle_half > 0.0 && paddle_half < 0.5)) throw ConfigError("paddle_half out of range");
    if (!(0.0 < agent_x && agent_x < opponent_x && opponent_x < 1.0))
        throw ConfigError("paddle columns must satisfy 0 < agent_x < opponent_x < 1");
    if (!(max_serve_angle_deg >= 0.0 && max_serve_angle_deg < 90.0) ||
        !(max_bounce_angle_deg >= 0.0 && max_bounce_angle_deg < 90.0))
        throw ConfigError("angles must lie in [0, 90)");
    // The fastest vertical ball motion must outrun the opponent.
    if (!(opponent_speed < ball_speed * std::sin(deg2rad(max_bounce_angle_deg))))
        throw ConfigError("opponent_speed must be below the maximal vertical ball speed");
    if (frame_width < 4 || frame_height < 4) throw ConfigError("frame too small");
}

Vector pong_coordinates(const PongState& s) {
    Vector xi(4);
    xi << s.ball_x, s.ball_y, s.agent_y, s.opponent_y;
    return xi;
}

WorldObservation env_observe(const PongState& state) { return {pong_coordinates(state), 0.0}; }

PongState env_reset(const PongConfig& config, std::mt19937_64& rng) {
    config.validate();
    PongState s;
    s.rng_state = rng();
    serve(s, config);
    return s;
}

PongStep env_step(const PongState& state, std::size_t action, const PongConfig& c) {
    if (state.step >= c.horizon) throw EpisodeFinished("episode already reached its horizon");
    if (action >= kPongActions) throw std::invalid_argument("invalid pong action");

    PongState s = state;
    const double lo = c.paddle_half;
    const double hi = 1.0 - c.paddle_half;

    const auto act = static_cast<PongAction>(action);
    if (act == PongAction::Up) s.agent_y += c.agent_speed;
    if (act == PongAction::Down) s.agent_y -= c.agent_speed;
    s.agent_y = std::clamp(s.agent_y, lo, hi);

    const double chase = std::clamp(c.opponent_gain * (s.ball_y - s.opponent_y), -c.opponent_speed,
                                    c.opponent_speed);
    s.opponent_y = std::clamp(s.opponent_y + chase, lo, hi);

    double reward = 0.0;
    if (s.serve_timer > 0) {
        --s.serve_timer;
    } else {
        double nx = s.ball_x + s.ball_vx;
        double ny = s.ball_y + s.ball_vy;
        reflect_walls(ny, s.ball_vy);
        if (s.ball_vx < 0.0)
            paddle_bounce(c.agent_x, s.agent_y, +1.0, s.ball_x, s.ball_y, nx, ny, s.ball_vx,
                          s.ball_vy, c);
        else
            paddle_bounce(c.opponent_x, s.opponent_y, -1.0, s.ball_x, s.ball_y, nx, ny, s.ball_vx,
                          s.ball_vy, c);
        s.ball_x = nx;
        s.ball_y = ny;

        if (s.ball_x < 0.0) {
            reward = -1.0;
            ++s.opponent_score;
        } else if (s.ball_x > 1.0) {
            reward = 1.0;
            ++s.agent_score;
        }
        if (reward != 0.0) {
            serve(s, c);
            s.serve_timer = c.serve_delay;
        }
    }
    ++s.step;
    return {s, env_observe(s), reward};
}

PongState random_pong_state(const PongConfig& config, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> paddle(config.paddle_half, 1.0 - config.paddle_half);
    PongState s;
    s.ball_x = unit(rng);
    s.ball_y = unit(rng);
    s.agent_y = paddle(rng);
    s.opponent_y = paddle(rng);
    s.rng_state = rng();
    return s;
}

std::size_t Frame::count_on() const {
    return static_cast<std::size_t>(std::count(pixels.begin(), pixels.end(), std::uint8_t{1}));
}

Frame render_frame(const PongState& s, const PongConfig& c) {
    Frame f{c.frame_width, c.frame_height, std::vector<std::uint8_t>(c.frame_width * c.frame_height, 0)};
    auto fill = [&f](std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1) {
        for (std::size_t r = r0; r <= r1 && r < f.height; ++r)
            for (std::size_t col = c0; col <= c1 && col < f.width; ++col) f.pixels[r * f.width + col] = 1;
    };
    // Row 0 is the top of the field (y = 1).
    auto paddle = [&](double x, double y) {
        const std::size_t col = to_index(x, f.width);
        const std::size_t top = to_index(1.0 - (y + c.paddle_half), f.height);
        const std::size_t bottom = to_index(1.0 - (y - c.paddle_half), f.height);
        fill(top, bottom, col, col + 1);
    };
    paddle(c.agent_x, s.agent_y);
    paddle(c.opponent_x, s.opponent_y);
    const std::size_t row = std::min(to_index(1.0 - s.ball_y, f.height), f.height - 2);
    const std::size_t col = std::min(to_index(s.ball_x, f.width), f.width - 2);
    fill(row, row + 1, col, col + 1);
    return f;
}

void write_pgm(const Frame& frame, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out << "P5\n" << frame.width << ' ' << frame.height << "\n255\n";
    for (auto px : frame.pixels) out.put(static_cast<char>(px ? 255 : 0));
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

Matrix make_pixel_projection(std::size_t dim, std::size_t n_pixels, double sigma,
                             std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix f(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(n_pixels));
    for (Eigen::Index col = 0; col < f.cols(); ++col)
        for (Eigen::Index row = 0; row < f.rows(); ++row) f(row, col) = sigma * gauss(rng);
    return f;
}

Vector pixel_project(const Frame& frame, const Matrix& projection) {
    if (static_cast<std::size_t>(projection.cols()) != frame.pixels.size())
        throw std::invalid_argument("pixel_project: projection width does not match frame");
    Vector xi = Vector::Zero(projection.rows());
    for (std::size_t h = 0; h < frame.pixels.size(); ++h)
        if (frame.pixels[h]) xi += projection.col(static_cast<Eigen::Index>(h));
    return xi;
}

Observer::Observer(const PongConfig& config, std::size_t dim, double sigma, std::uint64_t seed)
    : projection_(make_pixel_projection(dim, config.frame_width * config.frame_height, sigma, seed)) {}

std::size_t Observer::dim() const {
    return uses_pixels() ? static_cast<std::size_t>(projection_.rows()) : kPongStateDim;
}

Vector Observer::operator()(const PongState& state, const PongConfig& config) const {
    if (!uses_pixels()) return pong_coordinates(state);
    return pixel_project(render_frame(state, config), projection_);
}

}  // namespace dreamnet
