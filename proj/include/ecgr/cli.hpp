#pragma once

namespace ecgr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;    // bad flags, unreadable or invalid input, I/O failure
inline constexpr int kExitNumeric = 3;  // non-finite values during training or restoration

inline constexpr const char* kVersion = "0.1.0";

// Entry point of the `ecgr` tool: synth | train | restore | evaluate | plot.
int run(int argc, const char* const* argv);

}  // namespace ecgr::cli
