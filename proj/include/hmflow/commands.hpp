#pragma once

#include "hmflow/config.hpp"
#include "hmflow/error.hpp"

#include <iosfwd>
#include <string>

namespace hmflow {

enum ExitCode : int {
    ExitSuccess = 0,
    ExitInternal = 1,
    ExitConfig = 2,
    ExitNoContraction = 3,
    ExitVerification = 4,
};

int exit_code_for(ErrorCode code) noexcept;

/// Path CSV plus moments.json with the degree-1 decay checks.
int cmd_simulate_forward(const RunConfig& config, std::ostream& log);
/// Field, iterations.jsonl, errors.csv, summary.json and optional SVG plots.
int cmd_solve(const RunConfig& config, std::ostream& log);
/// verdict.json for a stored field; 4 when any check fails.
int cmd_verify(const RunConfig& config, std::ostream& log);

/// Runs one command by name and turns errors into exit codes, reporting them on `log`.
int run_command(const std::string& command, const RunConfig& config, std::ostream& log);

}  // namespace hmflow
