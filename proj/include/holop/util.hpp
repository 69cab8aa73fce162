#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace holop {

// splitmix64: the standard finalizer-style generator. Used as a counter-based
// source so that sample i of run (seed) is the same regardless of evaluation
// order or thread count.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  return splitmix64(s);
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return hash_combine(hash_combine(a, b), c);
}

// mt19937_64 keyed by a counter hash; gives order-independent per-item streams.
inline std::mt19937_64 keyed_engine(std::uint64_t seed, std::uint64_t counter) {
  return std::mt19937_64(hash_combine(seed, counter));
}

inline double uniform_pm1(std::mt19937_64& eng) {
  return std::uniform_real_distribution<double>(-1.0, 1.0)(eng);
}

// Radical-inverse Halton point in [-1,1]^d, 0-based index.
std::vector<double> halton_point(std::size_t index, int d);

// Deterministic pairwise (cascade) summation; order fixed by the input order.
double pairwise_sum(std::span<const double> values);

// FNV-1a over a string, used for output manifests.
std::uint64_t fnv1a64(const std::string& text);

// Shortest round-trip decimal formatting (17 significant digits).
std::string format_full(double v);

}  // namespace holop
