#pragma once

// Shared text-output conventions: 12 significant digits, UTF-8 CSV with a
// header row, and a leading '#' comment line naming the tool version and the
// hash of the configuration that produced the file.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <string_view>

namespace latticeqo {

inline constexpr std::string_view kVersion = "0.1.0";

inline std::string format_double(double x) {
  if (x == 0.0) x = 0.0;  // no "-0" in output
  if (std::isnan(x)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

// 64-bit FNV-1a, rendered as 16 hex digits. Stable across platforms, unlike std::hash.
inline std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct OutputMeta {
  std::string config_hash = "none";
};

inline void write_meta_comment(std::ostream& os, const OutputMeta& meta) {
  os << "# latticeqo " << kVersion << " config_hash=" << meta.config_hash << '\n';
}

}  // namespace latticeqo
