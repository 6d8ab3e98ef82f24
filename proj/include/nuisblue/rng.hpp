#pragma once

#include <cstdint>
#include <initializer_list>

namespace nuisblue {

// Deterministic generator used for every random draw in the library.
// splitmix64 core with Box-Muller on top; the stream produced by a given
// (seed, derivation path) pair is identical across platforms and runs, which
// is what the reproducibility guarantees lean on.  Not crypto, not
// thread-safe; make one per logical stream instead of sharing.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  // Child stream keyed by an integer path, e.g. derive(seed, {2, trial, k}).
  // Mixing is injective enough in practice that distinct paths do not
  // collide for the path lengths used here.
  static Rng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53 random bits.
  double next_unit();

  // Standard normal via Box-Muller; pairs are generated and cached, so the
  // draw order is part of the stream contract.
  double next_gaussian();

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace nuisblue
