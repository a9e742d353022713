#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace loctime::cli {

enum ExitCode : int { kOk = 0, kInternal = 1, kValidation = 2, kAccuracy = 3, kAdmissibility = 4 };

/// Full command line handling: parse, validate, run, persist. args excludes
/// the program name. Messages go to out / err.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace loctime::cli
