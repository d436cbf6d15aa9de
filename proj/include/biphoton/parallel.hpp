#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>

namespace biphoton {

// Worker count: BIPHOTON_LAB_THREADS when set (>= 1), otherwise the hardware
// concurrency.
unsigned thread_budget();

// Splits [0, n) into contiguous chunks, one per worker. The body must only
// write to state owned by its index range.
void parallel_for(std::size_t n, const std::function<void(std::size_t begin, std::size_t end)>& body);

// Independent random streams keyed by (seed, purpose, index). Results never
// depend on how work is scheduled across threads.
enum class Stream : std::uint32_t {
  PairEpochs = 1,
  RelativeDelays = 2,
  Thinning = 3,
  NoiseSingles = 4,
  DarkCounts = 5,
  BeamSplitter = 6,
  ScanPoints = 7,
  Bootstrap = 8,
};

std::mt19937_64 substream(std::uint64_t seed, Stream purpose, std::uint64_t index);

}  // namespace biphoton
