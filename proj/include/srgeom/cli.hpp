#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace srg::cli {

/// Exit codes: 0 success or pass, 1 a checked inequality failed, 2 usage or
/// configuration error.
constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

/// Runs one subcommand. The report goes to --out when given, else to `out`;
/// diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace srg::cli
