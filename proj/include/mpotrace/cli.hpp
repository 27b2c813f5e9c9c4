#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mpotrace::cli {

inline constexpr int exit_ok      = 0;
inline constexpr int exit_failure = 1;
inline constexpr int exit_usage   = 2;

// Runs `mpotrace <args...>`; args excludes the program name.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

// Applies MPOTRACE_LOG (trace, debug, info, warn, err, critical, off).
void configure_logging();

} // namespace mpotrace::cli
