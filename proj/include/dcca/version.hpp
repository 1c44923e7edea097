#pragma once

namespace dcca {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace dcca
