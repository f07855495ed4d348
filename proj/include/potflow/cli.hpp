#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace potflow::cli {

enum ExitCode : int { kSuccess = 0, kNumericalFailure = 1, kUsageError = 2 };

struct Overrides {
  std::optional<std::filesystem::path> output_directory;
  std::optional<int> threads;
};

/// Runs one subcommand (check-gas, solve, sweep, critical, limit, verify,
/// export) on a config file. Reports go to `out`, errors to `err`.
int run(const std::string& subcommand, const std::filesystem::path& config_path,
        std::ostream& out, std::ostream& err, const Overrides& overrides = {});

/// argv-style entry point with usage text on malformed input.
int main(int argc, char** argv, std::ostream& out, std::ostream& err);

const std::vector<std::string>& subcommands();

}  // namespace potflow::cli
