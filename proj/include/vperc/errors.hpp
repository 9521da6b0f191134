#pragma once

#include <stdexcept>
#include <string>

namespace vperc {

inline constexpr const char* kVersion = "0.1.0";

/// Bad user-supplied parameter (CLI exit code 2).
struct parameter_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Exceeded a configured budget, e.g. grid memory or enumeration size (CLI exit code 3).
struct resource_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Query on a configuration that cannot answer it (e.g. empty point set).
struct state_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Discovery ran out of padded window before certifying a box coloring.
/// Under the padding rule this has probability < 1e-9 per query.
struct window_too_small_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw parameter_error(msg);
}

}  // namespace vperc
