#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rotors {

/// Exit codes of the command-line front end.
enum ExitCode : int { exit_ok = 0, exit_fail = 1, exit_usage = 2 };

/// Runs one subcommand: average, simulate, equilibrium-check, drift-scan,
/// lyapunov-scan, control, hist or flux. Results go to the output directory
/// (config output_dir, overridden by ROTORS_OUTPUT_DIR) and a summary to out.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rotors
