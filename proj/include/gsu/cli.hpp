#pragma once

namespace gsu::cli {

// Entry point for the `gsu` tool. Returns the process exit code:
// 0 ok, 1 malformed input/usage, 2 numeric failure (NaN abort).
int run(int argc, const char* const* argv);

}  // namespace gsu::cli
