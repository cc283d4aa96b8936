#pragma once

// Command-line entry point: simulate, fit, mc, llt, constants.

#include <iosfwd>
#include <string>
#include <vector>

namespace sqmle {

struct CliInvocation {
  std::string subcommand;
  std::string config_path;
  std::string preset;
  std::vector<std::string> overrides;  // "section.key=value"
  int verbosity = 0;
};

/// Parses argv (including the program name) and runs the subcommand.
/// Exit codes: 0 success, 1 usage error, 2 numeric, model or optimization
/// failure, 3 Monte Carlo failure beyond the threshold.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Text listing every preset and config key with its default.
std::string config_reference();

}  // namespace sqmle
