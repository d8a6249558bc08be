#pragma once

namespace anisolab {
inline constexpr const char* kVersion = "0.1.0";
}
