#pragma once

namespace sosmap {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace sosmap
