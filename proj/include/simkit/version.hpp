#pragma once

namespace simkit {

inline constexpr const char* kVersionString = "simkit 0.1.0";

}  // namespace simkit
