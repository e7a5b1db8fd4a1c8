#pragma once

namespace wate {

// Command-line driver; returns the process exit code. Flag and configuration
// problems exit nonzero before any output is produced; estimation failures in
// individual cells are recorded inside the report instead and still exit 0.
int run_cli(int argc, const char* const* argv);

} // namespace wate
