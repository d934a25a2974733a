#pragma once

// Command-line front end: gen-data, train, eval, ablate, visualize.
//
// Every command reads a flat JSON config (--config FILE) whose keys are
// listed with their defaults in --help; flags override file values.

#include <nlohmann/json.hpp>

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ttvrs::cli {

enum ExitCode : int { ok = 0, failure = 1, config_error = 2, missing_artifact = 3, numeric_failure = 4 };

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct ConfigKey {
    std::string name;
    nlohmann::json default_value;
    std::string help;
};

const std::vector<std::string>& command_names();

/// Keys accepted by `command`, in --help order.
const std::vector<ConfigKey>& command_keys(const std::string& command);

/// Defaults, then `file` (may be null), then flag overrides given as raw
/// strings. Unknown keys and ill-typed values raise ConfigError.
nlohmann::json resolve_config(const std::string& command, const nlohmann::json* file,
                              const std::vector<std::pair<std::string, std::string>>& flags);

/// Full entry point; returns the process exit code.
int run(int argc, const char* const* argv);

} // namespace ttvrs::cli
