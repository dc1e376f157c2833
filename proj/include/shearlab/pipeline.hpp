#pragma once

// Subcommand drivers. Each writes its reports into cfg.output and returns the exit
// code; reports carry no timings so that equal configs give byte-identical files.

#include <string>
#include <vector>

#include "shearlab/config.hpp"

namespace shearlab {

enum ExitCode : int {
  kExitOk = 0,
  kExitConditionFails = 2,
  kExitNumericalFailure = 3,
  kExitInvalidConfig = 4,
};

struct CommandResult {
  int exit_code = kExitOk;
  std::string message;
  std::vector<std::string> files;  // paths written, in order
};

CommandResult cmd_check_tensor(const RunConfig& cfg);
CommandResult cmd_lift(const RunConfig& cfg);
CommandResult cmd_certify(const RunConfig& cfg);
CommandResult cmd_solve(const RunConfig& cfg);
CommandResult cmd_counterexample(const RunConfig& cfg);
CommandResult cmd_verify_lemmas(const RunConfig& cfg);

/// Dispatch by subcommand name with the exception-to-exit-code mapping applied:
/// ConfigError, ExpressionError, FamilyError, IncompatibleData -> 4; solver and
/// factorization failures -> 3.
CommandResult run_command(const std::string& name, const RunConfig& cfg);

const std::vector<std::string>& command_names();

}  // namespace shearlab
