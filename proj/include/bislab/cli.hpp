#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bislab {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitRuntime = 2 };

/// Entry point of the `bislab` tool: subcommands gen, train, finetune, bis,
/// grid and report. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace bislab
