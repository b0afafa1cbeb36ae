#pragma once

// Command-line configuration, multi-seed fan-out and CSV output.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dreamnet/trainer.hpp"

namespace dreamnet {

struct RunConfig {
    TrainerConfig trainer;
    std::vector<std::uint64_t> seeds{0};
    std::filesystem::path out_dir = "runs";
    bool dump_frames = false;  // PGM frames of the first and last awake episode per seed
    unsigned threads = 0;      // 0: one per hardware thread
};

class UsageError : public std::runtime_error {
public:
    UsageError(const std::string& what, int exit_code)
        : std::runtime_error(what), exit_code_(exit_code) {}
    int exit_code() const { return exit_code_; }

private:
    int exit_code_;
};

// Sets one configuration key (dashes and underscores are interchangeable).
// Throws ConfigError on an unknown key or a malformed value.
void apply_config_value(RunConfig& config, std::string_view key, std::string_view value);

// Flat "key = value" lines ('#' comments) or a flat JSON object.
void load_config_file(const std::filesystem::path& path, RunConfig& config);

// "3" means seeds 0, 1, 2; "4,8,15" is an explicit list.
std::vector<std::uint64_t> parse_seed_list(std::string_view text);

// Throws UsageError (exit code 0 for --help) on bad input.
RunConfig parse_args(int argc, const char* const* argv);

std::string usage_text();

inline constexpr std::string_view kMetricsHeader =
    "iteration,env_interactions,episode_reward,dream_reward,model_loss_xi,model_loss_r,wall_ms";

void write_metrics_csv(std::ostream& out, const std::vector<TrainRecord>& records);
void write_metrics_csv(const std::filesystem::path& path, const std::vector<TrainRecord>& records);
std::vector<TrainRecord> read_metrics_csv(const std::filesystem::path& path);

struct SeriesStats {
    double mean = 0.0;
    double sem = 0.0;  // sample standard deviation / sqrt(n); 0 for a single seed
    double p80 = 0.0;  // nearest-rank 80th percentile
};

SeriesStats summarize(std::vector<double> values);

struct SummaryRow {
    std::size_t iteration = 0;
    std::uint64_t env_interactions = 0;
    SeriesStats episode_reward;
    SeriesStats dream_reward;
    SeriesStats model_loss_xi;
    SeriesStats model_loss_r;
};

// One row per iteration across seeds; all runs must have the same length.
std::vector<SummaryRow> summarize_runs(const std::vector<std::vector<TrainRecord>>& runs);
void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& rows);

std::filesystem::path metrics_path(const std::filesystem::path& out_dir, std::uint64_t seed);

// Runs every seed (concurrently when threads allow) and returns the records in
// seed order. Throws if any seed fails.
std::vector<std::vector<TrainRecord>> run_seeds(const RunConfig& config);

// Runs the experiment and writes metrics_seed<k>.csv files plus summary.csv.
// Returns 0 iff every seed completed and all files were written.
int run_experiment(const RunConfig& config);

}  // namespace dreamnet
