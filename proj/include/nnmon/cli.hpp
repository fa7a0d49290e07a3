#pragma once

#include <ostream>

namespace nnmon::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;

/// Runs the nnmon command line. Results go to `out`, the resolved
/// configuration and diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nnmon::cli
