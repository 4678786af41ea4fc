#pragma once

#include <cstdint>

namespace microcolor {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

}  // namespace microcolor
