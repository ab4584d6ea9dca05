#pragma once

namespace qest {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace qest
