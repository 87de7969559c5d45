#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace advbench {

/// Shortest round-trip decimal representation; keeps text artifacts
/// deterministic and exactly re-parseable.
inline std::string double_str(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

}  // namespace advbench
