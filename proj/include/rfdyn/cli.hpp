#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace rfdyn {

// Runs the command line `args` (without the program name). Returns 0 on success, 2 on a
// usage error and 1 on a runtime error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Turns a JSON object or "key = value" lines into "--key value" tokens
// (underscores in keys become dashes; arrays become comma-separated lists).
std::vector<std::string> config_to_args(const std::string& text);

}  // namespace rfdyn
