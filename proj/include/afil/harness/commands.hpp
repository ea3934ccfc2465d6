#pragma once

#include <filesystem>
#include <ostream>

namespace afil::harness {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// afil train|collect|eval|ablate|report. Usage and config errors exit 2
// before anything is written; runtime failures exit 1.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Relative paths land under $AFIL_OUTPUT_ROOT when it is set.
std::filesystem::path output_path(const std::filesystem::path& path);

}  // namespace afil::harness
