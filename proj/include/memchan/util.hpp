#pragma once

#include <cstdint>
#include <string_view>

namespace memchan {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Per-module subseed: global seed mixed with the module name, so commands
// can be re-run in isolation without sharing RNG streams.
inline std::uint64_t subseed(std::uint64_t global_seed, std::string_view module_name) {
  return splitmix64(global_seed ^ fnv1a64(module_name));
}

}  // namespace memchan
