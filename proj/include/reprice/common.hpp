#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace reprice {

inline constexpr double inf = std::numeric_limits<double>::infinity();

// bad user input (config, parameters); the CLI maps this to exit code 2
struct invalid_input : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// solver or invariant failure that should not happen on valid input
struct internal_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {
inline std::function<void(const std::string&)>& warning_sink() {
    static std::function<void(const std::string&)> sink;
    return sink;
}
inline std::mutex& warning_mutex() {
    static std::mutex m;
    return m;
}
} // namespace detail

/// Replace the warning handler. An empty function restores the default (stderr).
inline void set_warning_handler(std::function<void(const std::string&)> f) {
    std::lock_guard lock(detail::warning_mutex());
    detail::warning_sink() = std::move(f);
}

inline void warn(const std::string& msg) {
    std::lock_guard lock(detail::warning_mutex());
    if (detail::warning_sink())
        detail::warning_sink()(msg);
    else
        std::fprintf(stderr, "warning: %s\n", msg.c_str());
}

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw invalid_input(msg);
}

inline bool finite_all(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

} // namespace reprice
