#pragma once

namespace labeldec {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace labeldec
