#pragma once

namespace rsopt {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace rsopt
