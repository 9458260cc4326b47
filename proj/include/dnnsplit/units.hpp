#pragma once

// Unit canon used throughout the library:
//   time     seconds
//   data     bits (model tables are in KB, converted here)
//   compute  MM (million multiplications), rates in MM/s
//   memory   KB
// KB = 1024 bytes; MB = 1000 KB so that 524.288 MB == 2^19 KB exactly.

namespace dnnsplit::units {

inline constexpr double bits_per_byte = 8.0;
inline constexpr double bytes_per_kb = 1024.0;
inline constexpr double bits_per_kb = bits_per_byte * bytes_per_kb;
inline constexpr double kb_per_mb = 1000.0;
inline constexpr double bps_per_mbps = 1.0e6;

constexpr double kb_to_bits(double kb) { return kb * bits_per_kb; }
constexpr double bits_to_kb(double bits) { return bits / bits_per_kb; }
constexpr double mb_to_kb(double mb) { return mb * kb_per_mb; }
constexpr double mbps_to_bps(double mbps) { return mbps * bps_per_mbps; }

}  // namespace dnnsplit::units
