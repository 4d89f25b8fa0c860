#pragma once

namespace dissensus {

inline constexpr const char* kToolName = "dissensus";
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kTraceFormatVersion = 1;

}  // namespace dissensus
