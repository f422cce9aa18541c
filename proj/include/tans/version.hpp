#pragma once

namespace tans {

inline constexpr const char* kVersion = "0.1.0";

}
