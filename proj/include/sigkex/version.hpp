#pragma once

namespace sigkex {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace sigkex
