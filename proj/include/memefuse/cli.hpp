#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace memefuse {

/// Entry point of the `memefuse` tool. `args` excludes the program name.
/// Returns the process exit code: 0 success, 2 config/usage, 3 training,
/// 4 data validation, 5 undefined metric.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace memefuse
