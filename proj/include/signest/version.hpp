#pragma once

namespace signest {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace signest
