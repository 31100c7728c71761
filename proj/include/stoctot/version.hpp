#pragma once

namespace stoctot {

inline constexpr const char* kVersion = "0.1.0";

} // namespace stoctot
