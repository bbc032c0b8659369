#pragma once

#include "fpfgain/config.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace fpfgain {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int io_failure = 1;
inline constexpr int bad_config = 2;
inline constexpr int numerical_failure = 3;
} // namespace exit_code

/// Executes a parsed configuration: writes the results CSV and a JSON sidecar
/// (output + ".json") holding the effective configuration and library version.
/// Files are written to a temporary path and renamed on success. Human-readable
/// summaries go to `log`.
int run(const RunConfig& config, std::ostream& log);

/// Atomically replaces `path` with `contents`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

/// Formats a double with 17 significant digits.
std::string format_real(double value);

} // namespace fpfgain
