#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace qbheat::cli {

/// Exit codes: 0 success, 1 usage error, 2 data or validation error,
/// 3 numerical failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qbheat::cli
