#pragma once

namespace scpw {

inline constexpr const char* tool_name = "scpw";
inline constexpr const char* tool_version = "1.0.0";
inline constexpr int config_schema_version = 1;
inline constexpr int trace_format_version = 1;
inline constexpr int report_format_version = 1;

}  // namespace scpw
