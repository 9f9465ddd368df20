#pragma once

namespace geowalk {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kVersionString = "geowalk 0.1.0";

}  // namespace geowalk
