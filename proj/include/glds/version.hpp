#pragma once

namespace glds {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace glds
