#pragma once

#include <string>
#include <vector>

namespace resoneq {

// Entry point of the resoneq tool; args exclude the program name.
// Returns 0 on success, 1 on usage errors, 2 on runtime errors.
int run_cli(const std::vector<std::string>& args);

} // namespace resoneq
