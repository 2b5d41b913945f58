#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace cli {

// Process exit codes.
enum ExitCode : int {
    exit_ok = 0,
    exit_config = 2,
    exit_numeric = 3,
    exit_constraint = 4,
};

struct Options {
    std::string command;  // validate | price | grid | mc-compare
    std::string config_path;
    std::string out_path;             // overrides [output] path
    std::vector<std::string> sweeps;  // KEY=start:end:count or KEY=a,b,c
    bool mc_check = false;
    std::optional<std::uint64_t> seed;
};

// Runs one command. Human-readable output goes to `out`, errors to `err`.
int run(const Options& opt, std::ostream& out, std::ostream& err);

}  // namespace cli
