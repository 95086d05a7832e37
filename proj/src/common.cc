#include "hi/common.h"

#include <atomic>
#include <cmath>
#include <iostream>

namespace hi {

namespace {
std::atomic<bool> g_quiet{false};
}  // namespace

Rng::Rng(uint64_t seed) : engine_(seed) {}

Rng::Rng(uint64_t root_seed, std::string_view stream) {
  const uint64_t tag = fnv1a(stream);
  std::seed_seq seq{static_cast<uint32_t>(root_seed),
                    static_cast<uint32_t>(root_seed >> 32),
                    static_cast<uint32_t>(tag), static_cast<uint32_t>(tag >> 32)};
  engine_.seed(seq);
}

double Rng::uniform() {
  // 53 random mantissa bits; identical on every platform for a given engine.
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

uint64_t Rng::below(uint64_t n) {
  if (n == 0) throw UsageError("Rng::below called with n = 0");
  // Rejection sampling keeps the draw unbiased.
  const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return v % n;
}

double Rng::normal() {
  // Box-Muller; one value per call.
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

uint64_t fnv1a(const void* data, size_t size, uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

int64_t ceil_fraction(double ratio, int64_t count) {
  const double raw = ratio * static_cast<double>(count);
  return static_cast<int64_t>(std::ceil(raw - 1e-9));
}

void log_warning(std::string_view message) {
  if (!g_quiet.load()) std::cerr << "warning: " << message << '\n';
}

void set_quiet(bool quiet) { g_quiet.store(quiet); }

}  // namespace hi
