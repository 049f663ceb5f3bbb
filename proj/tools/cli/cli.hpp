#pragma once

#include <ostream>

namespace qnnv::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitTimeout = 2;

// Entry point of the `qnnv` tool. Normal output goes to `out`, diagnostics to
// `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qnnv::cli
