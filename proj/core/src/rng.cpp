#include "nearq/rng.hpp"

namespace nearq {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t stream_key(std::uint64_t seed, std::string_view label, std::uint64_t index) {
  return splitmix64(splitmix64(seed ^ fnv1a64(label)) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

Engine make_stream(std::uint64_t seed, std::string_view label, std::uint64_t index) {
  return Engine(stream_key(seed, label, index));
}

double uniform01(Engine& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

double uniform(Engine& engine, double lo, double hi) { return lo + (hi - lo) * uniform01(engine); }

}  // namespace nearq
