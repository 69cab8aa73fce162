#include "holop/util.hpp"

#include <array>
#include <cstdio>

namespace holop {

namespace {

constexpr std::array<int, 16> kPrimes = {2,  3,  5,  7,  11, 13, 17, 19,
                                         23, 29, 31, 37, 41, 43, 47, 53};

double radical_inverse(std::size_t n, int base) {
  double inv = 1.0 / base;
  double scale = inv;
  double r = 0.0;
  while (n > 0) {
    r += static_cast<double>(n % base) * scale;
    n /= base;
    scale *= inv;
  }
  return r;
}

}  // namespace

std::vector<double> halton_point(std::size_t index, int d) {
  std::vector<double> x(d);
  for (int j = 0; j < d; ++j) {
    int base = kPrimes[j % kPrimes.size()];
    // For d beyond the prime table, decorrelate by index offset.
    std::size_t n = index + 1 + static_cast<std::size_t>(j / kPrimes.size()) * 7919;
    x[j] = 2.0 * radical_inverse(n, base) - 1.0;
  }
  return x;
}

double pairwise_sum(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace holop
