#pragma once

#include "sqz/detection.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace sqz
{

// Trace CSV:
//
//   # sqz-trace 1
//   # center_frequency_hz=1000000
//   # ... remaining acquisition keys, shot_reference_db, then annotations ...
//   time_s,power_db
//   0,1.25
//
// Numbers are written in the shortest form that reads back to the same double
// (fixed notation for data rows), so parse(serialize(t)) == t for every valid trace.
std::string serialize_trace(const NoiseTrace &trace);
NoiseTrace parse_trace(std::string_view text);

NoiseTrace load_trace(const std::filesystem::path &path);
void save_trace(const std::filesystem::path &path, const NoiseTrace &trace);

bool operator==(const NoiseTrace &a, const NoiseTrace &b);

} // namespace sqz
