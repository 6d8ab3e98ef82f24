#include "nuisblue/rng.hpp"

#include <cmath>

namespace nuisblue {

namespace {

// Finalizer from splitmix64.
std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

}  // namespace

Rng Rng::derive(std::uint64_t seed,
                std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix64(seed + 0x9e3779b97f4a7c15ULL);
  for (std::uint64_t p : path) {
    s = mix64(s ^ mix64(p + 0x9e3779b97f4a7c15ULL));
  }
  return Rng(s);
}

std::uint64_t Rng::next_u64() {
  state_ += 0x9e3779b97f4a7c15ULL;
  return mix64(state_);
}

double Rng::next_unit() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = next_unit();
  while (u1 <= 0.0) u1 = next_unit();
  const double u2 = next_unit();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * M_PI * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

}  // namespace nuisblue
