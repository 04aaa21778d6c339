#pragma once

namespace qdiss {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace qdiss
