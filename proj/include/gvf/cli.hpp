#pragma once

#include <string_view>

namespace gvf {

inline constexpr std::string_view kVersion = "0.1.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitNumerical = 2;
inline constexpr int kExitUsage = 64;

/// Runs one subcommand. argv[0] is the program name.
int cli_dispatch(int argc, const char* const* argv);

}  // namespace gvf
