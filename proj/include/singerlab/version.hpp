#pragma once

namespace singerlab {
inline constexpr const char* kVersion = "0.1.0";
}
