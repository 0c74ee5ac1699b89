#pragma once

namespace bts {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kTraceFormat = 1;
inline constexpr int kReportFormat = 1;
inline constexpr int kWeightsFormat = 1;

} // namespace bts
