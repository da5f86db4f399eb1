#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cskin {

/// Runs the command-line interface. Returns the process exit code (2 for usage errors).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cskin
