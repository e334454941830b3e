#pragma once

namespace assure {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace assure
