#pragma once

namespace lowexp {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace lowexp
