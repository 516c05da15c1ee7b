#pragma once

#include <functional>
#include <iosfwd>

namespace aicatcher::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitGrammar = 4;
inline constexpr int kExitModel = 5;

struct CliStreams {
    std::istream& in;
    std::ostream& out;
    std::ostream& err;
};

using GetEnv = std::function<const char*(const char*)>;

// aicatcher {train|evaluate|predict|features|serve|stats} [flags]
int run_cli(int argc, const char* const* argv, CliStreams io, const GetEnv& getenv);

// Asks a running `serve` command to shut down (safe from a signal handler).
void request_shutdown();

}  // namespace aicatcher::cli
