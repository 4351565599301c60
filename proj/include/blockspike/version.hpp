#pragma once

namespace blockspike {

inline constexpr const char* kVersion = "0.1.0";

}
