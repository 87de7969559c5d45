#pragma once

namespace advbench {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace advbench
