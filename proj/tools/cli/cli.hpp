#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace emobias::cli {

// Exit codes returned by run().
inline constexpr int kOk = 0;
inline constexpr int kUsageError = 1;
inline constexpr int kDataError = 2;

// args excludes the program name. Reports go to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace emobias::cli
