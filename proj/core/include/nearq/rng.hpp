#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace nearq {

// Every random quantity is drawn from a stream keyed by (run seed, label,
// index). Streams for different patients or labels are independent, so any
// sub-result can be regenerated in isolation.

using Engine = std::mt19937_64;

inline constexpr std::string_view kGeneratorFamily = "mt19937_64 keyed by splitmix64(seed, fnv1a64(label), index)";

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view text);
std::uint64_t stream_key(std::uint64_t seed, std::string_view label, std::uint64_t index);

Engine make_stream(std::uint64_t seed, std::string_view label, std::uint64_t index);

/// Uniform double in [0, 1) from the top 53 bits of one engine draw.
double uniform01(Engine& engine);
double uniform(Engine& engine, double lo, double hi);

}  // namespace nearq
