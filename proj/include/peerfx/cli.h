#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace peerfx {

// Entry point behind the `peerfx` binary. `args` excludes the program name.
// Returns the process exit code: 0 success, 1 runtime or estimation failure,
// 2 configuration error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace peerfx
