#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pvcast::cli {

/// Runs one pvcast command line. Returns 0 on success, 1 on a validation
/// or usage error and 2 on a runtime failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Convenience overload; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pvcast::cli
