#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace glab::cli {

enum ExitCode : int { exit_pass = 0, exit_violation = 1, exit_config_error = 2 };

// args excludes the program name, e.g. {"suite", "--config", "a.ini", "--out", "dir"}.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace glab::cli
