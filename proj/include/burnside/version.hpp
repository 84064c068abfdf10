#pragma once

namespace burnside {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace burnside
