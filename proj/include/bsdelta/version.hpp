#pragma once

namespace bsdelta {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace bsdelta
