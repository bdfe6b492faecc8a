#pragma once

namespace specdyn {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace specdyn
