#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace gsu {

// Base error for malformed inputs, shape mismatches, bad configs.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when a computation produces NaN/Inf. Maps to exit code 2 in the CLI.
struct NumericError : Error {
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

inline void check(bool cond, const std::string& msg) {
    if (!cond) throw Error(msg);
}

}  // namespace gsu
