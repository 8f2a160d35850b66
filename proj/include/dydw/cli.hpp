#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace dydw {

enum ExitCode : int {
    kExitOk = 0,
    kExitInternal = 1,
    kExitUsage = 2,
    kExitInvalidRange = 3,
    kExitIo = 4,
    kExitGatesFailed = 5,
    kExitReplayMismatch = 6,
};

inline constexpr const char* kToolVersion = "1.0.0";

/// Runs the command-line tool on `args` (without the program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

[[nodiscard]] std::uint64_t fnv1a64(const std::string& bytes);
[[nodiscard]] std::string format_double(double v);
[[nodiscard]] std::string csv_field(const std::string& s);

}  // namespace dydw
