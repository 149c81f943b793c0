#pragma once

namespace ctxkg {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;
inline constexpr int kExitUsage = 64;

/// Entry point of the `ctxkg` executable.
int run_cli(int argc, char** argv);

}  // namespace ctxkg
