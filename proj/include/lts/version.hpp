#pragma once

namespace lts {

inline constexpr const char* kVersion = "0.3.0";
inline constexpr int kGraphFormatVersion = 1;
inline constexpr int kCheckpointFormatVersion = 1;

}  // namespace lts
