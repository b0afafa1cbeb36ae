#include "dreamnet/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>
#include <tuple>

#include <CLI11.hpp>
#include <json.hpp>

namespace dreamnet {

namespace {

std::string normalize_key(std::string_view key) {
    std::string out(key);
    std::replace(out.begin(), out.end(), '-', '_');
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char ch) { return std::tolower(ch); });
    return out;
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

double to_double(std::string_view key, std::string_view text) {
    text = trim(text);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value))
        throw ConfigError("invalid number for '" + std::string(key) + "': '" + std::string(text) + "'");
    return value;
}

std::uint64_t to_uint(std::string_view key, std::string_view text) {
    text = trim(text);
    std::uint64_t value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
        throw ConfigError("invalid non-negative integer for '" + std::string(key) + "': '" +
                          std::string(text) + "'");
    return value;
}

bool to_bool(std::string_view key, std::string_view text) {
    text = trim(text);
    if (text == "1" || text == "true" || text == "yes" || text == "on") return true;
    if (text == "0" || text == "false" || text == "no" || text == "off") return false;
    throw ConfigError("invalid boolean for '" + std::string(key) + "': '" + std::string(text) + "'");
}

using Setter = std::function<void(RunConfig&, std::string_view key, std::string_view value)>;

Setter set_double(double TrainerConfig::*field) {
    return [field](RunConfig& c, std::string_view k, std::string_view v) { c.trainer.*field = to_double(k, v); };
}

Setter set_size(std::size_t TrainerConfig::*field) {
    return [field](RunConfig& c, std::string_view k, std::string_view v) {
        c.trainer.*field = static_cast<std::size_t>(to_uint(k, v));
    };
}

Setter set_neuron(double NeuronConfig::*field) {
    return [field](RunConfig& c, std::string_view k, std::string_view v) {
        const double x = to_double(k, v);
        c.trainer.agent_neurons.*field = x;
        c.trainer.model_neurons.*field = x;
    };
}

Setter set_pong(double PongConfig::*field) {
    return [field](RunConfig& c, std::string_view k, std::string_view v) { c.trainer.pong.*field = to_double(k, v); };
}

const std::map<std::string, Setter, std::less<>>& setters() {
    static const std::map<std::string, Setter, std::less<>> table = {
        {"mode", [](RunConfig& c, auto, auto v) { c.trainer.mode = parse_mode(trim(v)); }},
        {"iters", set_size(&TrainerConfig::n_iter)},
        {"seeds", [](RunConfig& c, auto, auto v) { c.seeds = parse_seed_list(v); }},
        {"out", [](RunConfig& c, auto, auto v) { c.out_dir = std::string(trim(v)); }},
        {"n_fut", set_size(&TrainerConfig::n_fut)},
        {"dt_pred", set_size(&TrainerConfig::dt_pred)},
        {"freeze_at", set_size(&TrainerConfig::freeze_at)},
        {"obs", [](RunConfig& c, auto, auto v) { c.trainer.obs = parse_obs_mode(trim(v)); }},
        {"dump_frames", [](RunConfig& c, auto k, auto v) { c.dump_frames = to_bool(k, v); }},
        {"threads", [](RunConfig& c, auto k, auto v) { c.threads = static_cast<unsigned>(to_uint(k, v)); }},
        {"awake_t",
         [](RunConfig& c, auto k, auto v) {
             c.trainer.awake_T = static_cast<std::size_t>(to_uint(k, v));
             c.trainer.pong.horizon = c.trainer.awake_T;
         }},
        {"dream_t", set_size(&TrainerConfig::dream_T)},
        {"gamma", set_double(&TrainerConfig::gamma)},
        {"clip_dream_reward", [](RunConfig& c, auto k, auto v) { c.trainer.clip_dream_reward = to_bool(k, v); }},
        {"record_timing", [](RunConfig& c, auto k, auto v) { c.trainer.record_timing = to_bool(k, v); }},
        {"neurons",
         [](RunConfig& c, auto k, auto v) {
             const auto n = static_cast<std::size_t>(to_uint(k, v));
             c.trainer.agent_neurons.n_neurons = n;
             c.trainer.model_neurons.n_neurons = n;
         }},
        {"agent_neurons",
         [](RunConfig& c, auto k, auto v) { c.trainer.agent_neurons.n_neurons = static_cast<std::size_t>(to_uint(k, v)); }},
        {"model_neurons",
         [](RunConfig& c, auto k, auto v) { c.trainer.model_neurons.n_neurons = static_cast<std::size_t>(to_uint(k, v)); }},
        {"dt", set_neuron(&NeuronConfig::dt)},
        {"tau_m", set_neuron(&NeuronConfig::tau_m)},
        {"tau_s", set_neuron(&NeuronConfig::tau_s)},
        {"tau_star", set_neuron(&NeuronConfig::tau_star)},
        {"v_th", set_neuron(&NeuronConfig::v_th)},
        {"v_rest", set_neuron(&NeuronConfig::v_rest)},
        {"w_res", set_neuron(&NeuronConfig::w_res_magnitude)},
        {"delta_v", set_neuron(&NeuronConfig::delta_v)},
        {"sigma_in",
         [](RunConfig& c, auto k, auto v) {
             const double x = to_double(k, v);
             c.trainer.sigma_in_agent = c.trainer.sigma_in_action = c.trainer.sigma_in_state = x;
         }},
        {"sigma_in_agent", set_double(&TrainerConfig::sigma_in_agent)},
        {"sigma_in_action", set_double(&TrainerConfig::sigma_in_action)},
        {"sigma_in_state", set_double(&TrainerConfig::sigma_in_state)},
        {"sigma_rec", set_double(&TrainerConfig::sigma_rec)},
        {"lr",
         [](RunConfig& c, auto k, auto v) {
             const double x = to_double(k, v);
             c.trainer.agent_adam.lr = x;
             c.trainer.model_adam.lr = x;
         }},
        {"agent_lr", [](RunConfig& c, auto k, auto v) { c.trainer.agent_adam.lr = to_double(k, v); }},
        {"model_lr", [](RunConfig& c, auto k, auto v) { c.trainer.model_adam.lr = to_double(k, v); }},
        {"c_xi", [](RunConfig& c, auto k, auto v) { c.trainer.loss.c_xi = to_double(k, v); }},
        {"c_r", [](RunConfig& c, auto k, auto v) { c.trainer.loss.c_r = to_double(k, v); }},
        {"pixel_dim", set_size(&TrainerConfig::pixel_dim)},
        {"pixel_sigma", set_double(&TrainerConfig::pixel_sigma)},
        {"ball_speed", set_pong(&PongConfig::ball_speed)},
        {"paddle_half", set_pong(&PongConfig::paddle_half)},
        {"ball_radius", set_pong(&PongConfig::ball_radius)},
        {"agent_speed", set_pong(&PongConfig::agent_speed)},
        {"opponent_speed", set_pong(&PongConfig::opponent_speed)},
        {"opponent_gain", set_pong(&PongConfig::opponent_gain)},
        {"max_serve_angle", set_pong(&PongConfig::max_serve_angle_deg)},
        {"max_bounce_angle", set_pong(&PongConfig::max_bounce_angle_deg)},
        {"serve_delay",
         [](RunConfig& c, auto k, auto v) { c.trainer.pong.serve_delay = static_cast<std::size_t>(to_uint(k, v)); }},
    };
    return table;
}

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

void apply_config_value(RunConfig& config, std::string_view key, std::string_view value) {
    const std::string k = normalize_key(trim(key));
    const auto& table = setters();
    const auto it = table.find(k);
    if (it == table.end()) throw ConfigError("unknown configuration key '" + k + "'");
    it->second(config, k, value);
}

void load_config_file(const std::filesystem::path& path, RunConfig& config) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();

    if (trim(text).starts_with("{")) {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("malformed JSON config: " + std::string(e.what()));
        }
        if (!doc.is_object()) throw ConfigError("JSON config must be a flat object");
        for (const auto& [key, value] : doc.items()) {
            std::string v;
            if (value.is_string()) v = value.get<std::string>();
            else if (value.is_boolean()) v = value.get<bool>() ? "true" : "false";
            else if (value.is_number_integer()) v = std::to_string(value.get<long long>());
            else if (value.is_number()) v = format_double(value.get<double>());
            else if (value.is_array() && key == "seeds") {
                for (const auto& s : value) v += (v.empty() ? "" : ",") + std::to_string(s.get<std::uint64_t>());
                if (value.size() == 1) v += ",";
            } else throw ConfigError("unsupported JSON value for '" + key + "'");
            apply_config_value(config, key, v);
        }
        return;
    }

    std::istringstream lines(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        std::string_view view = line;
        if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        view = trim(view);
        if (view.empty()) continue;
        const auto eq = view.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
        apply_config_value(config, view.substr(0, eq), view.substr(eq + 1));
    }
}

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
    text = trim(text);
    if (text.empty()) throw ConfigError("seed list is empty");
    std::vector<std::uint64_t> seeds;
    if (text.find(',') == std::string_view::npos) {
        const auto count = to_uint("seeds", text);
        if (count == 0) throw ConfigError("seed count must be positive");
        for (std::uint64_t s = 0; s < count; ++s) seeds.push_back(s);
        return seeds;
    }
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto piece = trim(text.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                                    : comma - start));
        if (!piece.empty()) seeds.push_back(to_uint("seeds", piece));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    if (seeds.empty()) throw ConfigError("seed list is empty");
    return seeds;
}

namespace {

struct CliValues {
    std::string mode, iters, seeds, out, config, n_fut, dt_pred, freeze_at, obs, neurons, threads;
    bool dump_frames = false;
    bool record_timing = false;
    std::vector<std::string> sets;
};

void build_app(CLI::App& app, CliValues& v) {
    app.add_option("--mode", v.mode, "baseline | dream | plan | sleep-only | freeze-model")->required();
    app.add_option("--iters", v.iters, "iterations (awake episodes) per seed");
    app.add_option("--seeds", v.seeds, "seed count (e.g. 10) or comma list (e.g. 3,7,11)");
    app.add_option("--out", v.out, "output directory");
    app.add_option("--config", v.config, "key=value or JSON config file; flags take precedence");
    app.add_option("--n-fut", v.n_fut, "planning rollout length");
    app.add_option("--dt-pred", v.dt_pred, "planning period (must equal 2 * n_fut)");
    app.add_option("--freeze-at", v.freeze_at, "freeze-model: last iteration that updates the model");
    app.add_option("--obs", v.obs, "coords | pixels");
    app.add_option("--neurons", v.neurons, "neurons per module");
    app.add_option("--threads", v.threads, "worker threads (0 = hardware concurrency)");
    app.add_flag("--dump-frames", v.dump_frames, "write PGM frames of the first and last awake episode");
    app.add_flag("--record-timing", v.record_timing, "fill the wall_ms column");
    app.add_option("--set", v.sets, "override any config key: --set tau_m=10")->allow_extra_args(false);
}

}  // namespace

std::string usage_text() {
    CLI::App app{"Spiking agent + world model trainer on MiniPong", "dreamnet"};
    CliValues v;
    build_app(app, v);
    return app.help();
}

RunConfig parse_args(int argc, const char* const* argv) {
    CLI::App app{"Spiking agent + world model trainer on MiniPong", "dreamnet"};
    CliValues v;
    build_app(app, v);
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        throw UsageError(app.help(), 0);
    } catch (const CLI::ParseError& e) {
        throw UsageError(std::string(e.what()) + "\n\n" + app.help(), e.get_exit_code() ? e.get_exit_code() : 2);
    }

    RunConfig config;
    try {
        if (!v.config.empty()) load_config_file(v.config, config);
        const std::tuple<const char*, const char*, const std::string*> flags[] = {
            {"mode", "--mode", &v.mode},          {"iters", "--iters", &v.iters},
            {"seeds", "--seeds", &v.seeds},       {"out", "--out", &v.out},
            {"n_fut", "--n-fut", &v.n_fut},       {"dt_pred", "--dt-pred", &v.dt_pred},
            {"freeze_at", "--freeze-at", &v.freeze_at}, {"obs", "--obs", &v.obs},
            {"neurons", "--neurons", &v.neurons}, {"threads", "--threads", &v.threads},
        };
        for (const auto& [key, flag, value] : flags)
            if (app.count(flag) > 0) apply_config_value(config, key, *value);
        if (v.dump_frames) config.dump_frames = true;
        if (v.record_timing) config.trainer.record_timing = true;
        for (const auto& assignment : v.sets) {
            const auto eq = assignment.find('=');
            if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + assignment + "'");
            apply_config_value(config, assignment.substr(0, eq), assignment.substr(eq + 1));
        }
        config.trainer.validate();
        if (config.seeds.empty()) throw ConfigError("seed list is empty");
    } catch (const ConfigError& e) {
        throw UsageError(std::string("error: ") + e.what(), 2);
    }
    return config;
}

void write_metrics_csv(std::ostream& out, const std::vector<TrainRecord>& records) {
    out << kMetricsHeader << '\n';
    for (const auto& r : records) {
        out << r.iteration << ',' << r.env_interactions << ',' << format_double(r.episode_reward) << ','
            << format_double(r.dream_reward) << ',' << format_double(r.model_loss_xi) << ','
            << format_double(r.model_loss_r) << ',' << format_double(r.wall_ms) << '\n';
    }
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<TrainRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    write_metrics_csv(out, records);
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::vector<TrainRecord> read_metrics_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kMetricsHeader)
        throw std::runtime_error(path.string() + ": unexpected header");
    std::vector<TrainRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream row(line);
        std::string cell;
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        if (cells.size() != 7) throw std::runtime_error(path.string() + ": malformed row");
        TrainRecord r;
        r.iteration = static_cast<std::size_t>(std::stoull(cells[0]));
        r.env_interactions = std::stoull(cells[1]);
        r.episode_reward = std::stod(cells[2]);
        r.dream_reward = std::stod(cells[3]);
        r.model_loss_xi = std::stod(cells[4]);
        r.model_loss_r = std::stod(cells[5]);
        r.wall_ms = std::stod(cells[6]);
        records.push_back(r);
    }
    return records;
}

SeriesStats summarize(std::vector<double> values) {
    SeriesStats s;
    if (values.empty()) return s;
    const double n = static_cast<double>(values.size());
    double sum = 0.0;
    for (double x : values) sum += x;
    s.mean = sum / n;
    if (values.size() > 1) {
        double ss = 0.0;
        for (double x : values) ss += (x - s.mean) * (x - s.mean);
        s.sem = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    std::sort(values.begin(), values.end());
    const auto rank = static_cast<std::size_t>(std::ceil(0.8 * n));
    s.p80 = values[std::max<std::size_t>(rank, 1) - 1];
    return s;
}

std::vector<SummaryRow> summarize_runs(const std::vector<std::vector<TrainRecord>>& runs) {
    std::vector<SummaryRow> rows;
    if (runs.empty()) return rows;
    const std::size_t length = runs.front().size();
    for (const auto& run : runs)
        if (run.size() != length) throw std::invalid_argument("runs have different lengths");
    for (std::size_t i = 0; i < length; ++i) {
        std::vector<double> reward, dream, loss_xi, loss_r;
        for (const auto& run : runs) {
            reward.push_back(run[i].episode_reward);
            dream.push_back(run[i].dream_reward);
            loss_xi.push_back(run[i].model_loss_xi);
            loss_r.push_back(run[i].model_loss_r);
        }
        rows.push_back({runs.front()[i].iteration, runs.front()[i].env_interactions, summarize(reward),
                        summarize(dream), summarize(loss_xi), summarize(loss_r)});
    }
    return rows;
}

void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out << "iteration,env_interactions";
    for (const char* name : {"episode_reward", "dream_reward", "model_loss_xi", "model_loss_r"})
        out << ',' << name << "_mean," << name << "_sem," << name << "_p80";
    out << '\n';
    for (const auto& r : rows) {
        out << r.iteration << ',' << r.env_interactions;
        for (const SeriesStats* s : {&r.episode_reward, &r.dream_reward, &r.model_loss_xi, &r.model_loss_r})
            out << ',' << format_double(s->mean) << ',' << format_double(s->sem) << ',' << format_double(s->p80);
        out << '\n';
    }
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::filesystem::path metrics_path(const std::filesystem::path& out_dir, std::uint64_t seed) {
    return out_dir / ("metrics_seed" + std::to_string(seed) + ".csv");
}

std::vector<std::vector<TrainRecord>> run_seeds(const RunConfig& config) {
    config.trainer.validate();
    const std::size_t n = config.seeds.size();
    std::vector<std::vector<TrainRecord>> results(n);
    std::vector<std::exception_ptr> errors(n);

    auto run_one = [&](std::size_t idx) {
        try {
            const std::uint64_t seed = config.seeds[idx];
            Trainer trainer(config.trainer, seed);
            if (config.dump_frames) {
                const auto dir = config.out_dir / "frames" / ("seed" + std::to_string(seed));
                std::filesystem::create_directories(dir);
                const std::size_t last = config.trainer.n_iter;
                const PongConfig pong = config.trainer.pong;
                trainer.set_step_hook([dir, last, pong](std::size_t it, std::size_t t, const PongState& s) {
                    if (it != 1 && it != last) return;
                    char name[64];
                    std::snprintf(name, sizeof name, "iter%05zu_t%03zu.pgm", it, t);
                    write_pgm(render_frame(s, pong), dir / name);
                });
            }
            results[idx] = trainer.train();
        } catch (...) {
            errors[idx] = std::current_exception();
        }
    };

    unsigned workers = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) run_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) run_one(i);
            });
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return results;
}

int run_experiment(const RunConfig& config) {
    try {
        std::filesystem::create_directories(config.out_dir);
        const auto runs = run_seeds(config);
        for (std::size_t i = 0; i < runs.size(); ++i)
            write_metrics_csv(metrics_path(config.out_dir, config.seeds[i]), runs[i]);
        write_summary_csv(config.out_dir / "summary.csv", summarize_runs(runs));
    } catch (const std::exception& e) {
        std::cerr << "dreamnet: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace dreamnet
