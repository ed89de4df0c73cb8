#pragma once

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace offsim {

// Exit codes used by the CLI and mirrored by the error hierarchy below.
enum class ExitCode : int {
    ok = 0,
    input_error = 1,
    config_error = 2,
    consistency_error = 3,
};

/// Malformed or out-of-range user input (files, records, CLI values).
class input_error : public std::runtime_error {
public:
    explicit input_error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid or contradictory configuration.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

/// Internally inconsistent state, e.g. a measured total smaller than the
/// modelled network terms it is supposed to contain.
class consistency_error : public std::runtime_error {
public:
    explicit consistency_error(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline std::string format(const char* fmt, ...) {
    va_list args;
    va_start(args, fmt);
    char buf[512];
    std::vsnprintf(buf, sizeof(buf), fmt, args);
    va_end(args);
    return std::string(buf);
}

}  // namespace detail

/// Fixed-precision millisecond formatting used by every report (0.01 ms).
inline std::string format_ms(double ms) { return detail::format("%.2f", ms); }

/// Human-readable decimal size: bytes below 1 kB, then kB / MB (1000-based).
inline std::string format_size(double bytes) {
    if (bytes < 1000.0) return detail::format("%.0f B", bytes);
    if (bytes < 1e6) return detail::format("%.2f KB", bytes / 1e3);
    return detail::format("%.2f MB", bytes / 1e6);
}

}  // namespace offsim
