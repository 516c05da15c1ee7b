#include <csignal>
#include <cstdlib>
#include <iostream>

#include "commands.hpp"

namespace {
void on_signal(int) { aicatcher::cli::request_shutdown(); }
}  // namespace

int main(int argc, char** argv) {
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    return aicatcher::cli::run_cli(argc, argv, {std::cin, std::cout, std::cerr},
                                   [](const char* name) { return std::getenv(name); });
}
