#pragma once

#include "nnmon/monitor.hpp"

#include <string>

namespace nnmon {

/// Versioned JSON document {"format":"nnmon-monitor","version":1,"kind":...}.
/// BDD node lists (u32 little-endian var/low/high triples) and bitset rows
/// (u64 little-endian) are embedded as base64. Output is deterministic and
/// parse(serialize(m)) reproduces every stored value bit for bit.
std::string serialize_monitor(const AnyMonitor& monitor);
AnyMonitor parse_monitor(const std::string& json_text);

void save_monitor(const AnyMonitor& monitor, const std::string& path);
AnyMonitor load_monitor(const std::string& path);

/// Base64 helpers shared with the tests.
std::string base64_encode(const std::string& bytes);
std::string base64_decode(const std::string& text);

}  // namespace nnmon
