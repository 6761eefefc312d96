#pragma once

namespace lrmr {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace lrmr
