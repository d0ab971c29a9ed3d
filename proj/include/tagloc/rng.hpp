#pragma once

#include <cstdint>

namespace tagloc {

// SplitMix64 run in counter mode: draw i is mix64(key + (i+1)*gamma) with the
// key derived from the (seed, stream) pair. Every draw depends only on
// (seed, stream, i), so streams can be handed to parallel workers and replayed
// exactly regardless of scheduling.
//
// normal() always consumes exactly two u64 draws, so callers that rely on
// paired-stream alignment can count draws.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();
  double uniform01();  // [0, 1), 53-bit resolution
  double normal();     // N(0, 1), Box-Muller

  std::uint64_t draw_count() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace tagloc
