#include <iostream>

#include "dreamnet/experiment.hpp"

int main(int argc, char** argv) {
    dreamnet::RunConfig config;
    try {
        config = dreamnet::parse_args(argc, argv);
    } catch (const dreamnet::UsageError& e) {
        (e.exit_code() == 0 ? std::cout : std::cerr) << e.what() << '\n';
        return e.exit_code();
    }
    return dreamnet::run_experiment(config);
}
