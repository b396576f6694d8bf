#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace opsys::cli {

enum ExitCode { kOk = 0, kVerificationFailed = 2, kLinealityFound = 3, kUsage = 4 };

/// Runs one subcommand; args excludes the program name. Reports go to --out
/// (default `out`), messages to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace opsys::cli
